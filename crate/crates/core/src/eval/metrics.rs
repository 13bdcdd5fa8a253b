use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::filter::EligibleSet;
use crate::model::{Prompt, RelevanceVector, SuggestionInventory};
use crate::rank::RankedInventory;
use crate::syntax::check_syntax;

/// Relevance of a perfect suggestion.
pub const IDEAL_LABEL: u8 = 3;

fn discount(i: usize) -> f64 {
    ((i + 1) as f64).log2()
}

/// DCG of a list where every one of the `k` slots holds the top label.
pub fn idcg(k: usize) -> f64 {
    (1..=k).map(|i| f64::from(IDEAL_LABEL) / discount(i)).sum()
}

pub fn dcg(labels: &[u8]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &rel)| f64::from(rel) / discount(i + 1))
        .sum()
}

pub fn ndcg_at_k(rel: &RelevanceVector) -> f64 {
    dcg(rel.labels()) / idcg(rel.k())
}

/// Relevance of every original position 1..=n. Dropped snippets get 0,
/// snippets scoring below 1 get 1, and the rest take their manual label.
pub fn relevance_by_position(
    ranked: &RankedInventory,
    manual_labels: Option<&BTreeMap<usize, u8>>,
) -> Result<BTreeMap<usize, u8>, EvalError> {
    let empty = BTreeMap::new();
    let labels = manual_labels.unwrap_or(&empty);
    let eligible: BTreeSet<usize> = ranked.rank_to_position.iter().copied().collect();
    let mut rel = BTreeMap::new();
    for position in 1..=ranked.inventory_size {
        if !eligible.contains(&position) {
            if let Some(&label) = labels.get(&position) {
                return Err(EvalError::IllegalLabel { position, label });
            }
            rel.insert(position, 0);
        }
    }
    for entry in &ranked.entries {
        let position = entry.suggestion.position;
        let manual = labels.get(&position).copied();
        let value = if entry.score() < 1.0 {
            if let Some(label) = manual {
                return Err(EvalError::IllegalLabel { position, label });
            }
            1
        } else {
            match manual {
                Some(l @ 2..=3) => l,
                Some(label) => return Err(EvalError::IllegalLabel { position, label }),
                None => return Err(EvalError::MissingLabel(position)),
            }
        };
        rel.insert(position, value);
    }
    Ok(rel)
}

/// Relevance in the framework's order: ranked snippets first, then the
/// dropped ones in original order.
pub fn assign_relevance(
    ranked: &RankedInventory,
    manual_labels: Option<&BTreeMap<usize, u8>>,
) -> Result<RelevanceVector, EvalError> {
    let rel = relevance_by_position(ranked, manual_labels)?;
    let ranked_positions: BTreeSet<usize> = ranked.rank_to_position.iter().copied().collect();
    let labels: Vec<u8> = ranked
        .rank_to_position
        .iter()
        .chain(rel.keys().filter(|p| !ranked_positions.contains(p)))
        .map(|p| rel[p])
        .collect();
    Ok(RelevanceVector::new(labels)?)
}

/// Relevance in the backend's original order.
pub fn model_order_relevance(
    ranked: &RankedInventory,
    manual_labels: Option<&BTreeMap<usize, u8>>,
) -> Result<RelevanceVector, EvalError> {
    let rel = relevance_by_position(ranked, manual_labels)?;
    Ok(RelevanceVector::new(rel.into_values().collect())?)
}

/// Percentages of parseable suggestions before and after filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilabilityStats {
    pub total: usize,
    pub parse_before: usize,
    pub parse_after: usize,
    pub pct_before: f64,
    pub pct_after: f64,
    pub pct_increase: f64,
    /// Percentage of prompts with at least one eligible snippet.
    pub prompts_with_one_plus: f64,
}

impl CompilabilityStats {
    pub fn from_counts(total: usize, parse_before: usize, parse_after: usize, prompts: usize, prompts_one_plus: usize) -> Self {
        let pct = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 * 100.0 / of as f64 };
        let pct_before = pct(parse_before, total);
        let pct_after = pct(parse_after, total);
        CompilabilityStats {
            total,
            parse_before,
            parse_after,
            pct_before,
            pct_after,
            pct_increase: pct_after - pct_before,
            prompts_with_one_plus: pct(prompts_one_plus, prompts),
        }
    }
}

/// The program a completion stands for before any cleaning: the prompt
/// followed by the completion, unless the completion already echoes it.
pub fn raw_program(completion: &str, prompt: &Prompt) -> String {
    let core = prompt.text.trim_end();
    if core.is_empty() || completion.trim_start().starts_with(core) {
        completion.to_string()
    } else {
        format!("{}{completion}", prompt.text)
    }
}

/// Raw suggestions that parse without any cleaning.
pub fn raw_parse_count(inv: &SuggestionInventory) -> usize {
    inv.suggestions
        .iter()
        .filter(|s| {
            check_syntax(&raw_program(&s.text, &inv.prompt), s.language)
                .map(|v| v.ok)
                .unwrap_or(false)
        })
        .count()
}

pub fn compilability_stats(before: &[SuggestionInventory], after: &[EligibleSet]) -> Result<CompilabilityStats, EvalError> {
    if before.len() != after.len() {
        return Err(EvalError::Alignment(format!(
            "{} inventories vs {} eligible sets",
            before.len(),
            after.len()
        )));
    }
    let (mut total, mut raw, mut kept, mut one_plus) = (0, 0, 0, 0);
    for (inv, el) in before.iter().zip(after) {
        if inv.prompt.id != el.prompt.id || inv.n != el.n {
            return Err(EvalError::Alignment(format!(
                "inventory `{}` paired with eligible set `{}`",
                inv.prompt.id, el.prompt.id
            )));
        }
        total += inv.n;
        raw += raw_parse_count(inv);
        kept += el.x;
        one_plus += usize::from(el.x > 0);
    }
    Ok(CompilabilityStats::from_counts(total, raw, kept, before.len(), one_plus))
}
