//! Stable quality-descending ranking of an eligible set.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::RankError;
use crate::filter::EligibleSet;
use crate::model::{CodeSuggestion, Prompt};
use crate::quality::QualityAssessment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub suggestion: CodeSuggestion,
    pub assessment: QualityAssessment,
}

impl RankedEntry {
    pub fn score(&self) -> f64 {
        self.assessment.score
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedInventory {
    pub prompt: Prompt,
    /// Size of the inventory the eligible set came from.
    pub inventory_size: usize,
    pub entries: Vec<RankedEntry>,
    /// Original 1-based position of the suggestion at each rank.
    pub rank_to_position: Vec<usize>,
}

impl RankedInventory {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top1(&self) -> Result<&RankedEntry, RankError> {
        self.entries.first().ok_or(RankError::EmptyRank)
    }
}

/// Orders the eligible suggestions by descending score. Equal scores keep
/// their original order.
pub fn rank(
    eligible: &EligibleSet,
    assessments: &[QualityAssessment],
) -> Result<RankedInventory, RankError> {
    if eligible.cleaned.len() != assessments.len() {
        return Err(RankError::AssessmentMismatch(format!(
            "{} suggestions, {} assessments",
            eligible.cleaned.len(),
            assessments.len()
        )));
    }
    let mut entries = Vec::with_capacity(assessments.len());
    for (sugg, a) in eligible.cleaned.iter().zip(assessments) {
        if sugg.position != a.suggestion_position {
            return Err(RankError::AssessmentMismatch(format!(
                "suggestion at position {} paired with assessment for {}",
                sugg.position, a.suggestion_position
            )));
        }
        if !a.score.is_finite() {
            return Err(RankError::AssessmentMismatch(format!(
                "non-finite score for position {}",
                sugg.position
            )));
        }
        entries.push(RankedEntry {
            suggestion: sugg.clone(),
            assessment: a.clone(),
        });
    }
    entries.sort_by(|a, b| b.score().partial_cmp(&a.score()).unwrap_or(Ordering::Equal));
    let rank_to_position = entries.iter().map(|e| e.suggestion.position).collect();
    Ok(RankedInventory {
        prompt: eligible.prompt.clone(),
        inventory_size: eligible.n,
        entries,
        rank_to_position,
    })
}

pub fn top1(ranked: &RankedInventory) -> Result<&RankedEntry, RankError> {
    ranked.top1()
}
