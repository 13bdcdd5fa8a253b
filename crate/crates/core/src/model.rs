//! Shared domain types: prompts, suggestions, findings, quality schemes and
//! relevance vectors. Everything here is an immutable value once built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Tolerance applied when checking that scheme weights sum to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl Language {
    /// Line-comment marker used when rendering repair prompts.
    pub fn comment_marker(self) -> &'static str {
        match self {
            Language::Python => "#",
            Language::Java => "//",
        }
    }

    pub fn file_extension(self) -> &'static str {
        match self {
            Language::Python => "py",
            Language::Java => "java",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Java => "java",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "java" => Ok(Language::Java),
            other => Err(ModelError::UnknownLanguage(other.to_string())),
        }
    }
}

/// The input handed to a generation backend: the verbatim prompt text plus
/// where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: String,
    pub language: Language,
    pub text: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_point: Option<String>,
}

impl Prompt {
    pub fn new(
        id: impl Into<String>,
        language: Language,
        text: impl Into<String>,
        dataset: impl Into<String>,
        entry_point: Option<String>,
    ) -> Result<Self, ModelError> {
        let prompt = Prompt {
            id: id.into(),
            language,
            text: text.into(),
            dataset: dataset.into(),
            entry_point,
        };
        prompt.validate()?;
        Ok(prompt)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.text.is_empty() {
            return Err(ModelError::EmptyPromptText(self.id.clone()));
        }
        Ok(())
    }
}

/// One generated snippet. `position` is the 1-based rank the backend gave it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSuggestion {
    pub prompt_id: String,
    pub position: usize,
    pub text: String,
    pub language: Language,
}

/// Context carried by an inventory produced from a repair prompt: the code
/// that was sent for repair and the findings that motivated it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairContext {
    pub original: String,
    pub findings: Vec<Finding>,
}

/// The ordered suggestions a backend returned for one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionInventory {
    pub prompt: Prompt,
    pub suggestions: Vec<CodeSuggestion>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_context: Option<RepairContext>,
}

impl SuggestionInventory {
    /// Builds an inventory from completions in backend order; positions are
    /// assigned 1..=n by index.
    pub fn from_completions(prompt: Prompt, completions: Vec<String>) -> Self {
        let suggestions = completions
            .into_iter()
            .enumerate()
            .map(|(i, text)| CodeSuggestion {
                prompt_id: prompt.id.clone(),
                position: i + 1,
                text,
                language: prompt.language,
            })
            .collect::<Vec<_>>();
        SuggestionInventory {
            n: suggestions.len(),
            prompt,
            suggestions,
            repair_context: None,
        }
    }

    pub fn with_repair_context(mut self, ctx: RepairContext) -> Self {
        self.repair_context = Some(ctx);
        self
    }

    /// Checks the count and the contiguous 1..=n position sequence.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n != self.suggestions.len() {
            return Err(ModelError::InventoryCount {
                declared: self.n,
                actual: self.suggestions.len(),
            });
        }
        for (i, s) in self.suggestions.iter().enumerate() {
            if s.position != i + 1 {
                return Err(ModelError::NonContiguousPositions {
                    index: i,
                    position: s.position,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// One analyzer-reported quality issue. Line numbers are 1-based and refer
/// to the analyzed snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub message: String,
    pub line_start: Option<usize>,
    pub line_end: Option<usize>,
    pub severity: Severity,
    pub source: String,
}

impl Finding {
    pub fn new(
        rule_id: impl Into<String>,
        message: impl Into<String>,
        line: Option<usize>,
        severity: Severity,
        source: impl Into<String>,
    ) -> Self {
        Finding {
            rule_id: rule_id.into(),
            message: message.into(),
            line_start: line,
            line_end: line,
            severity,
            source: source.into(),
        }
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.line_start = Some(start);
        self.line_end = Some(end);
        self
    }

    /// Inclusive line span, when the finding has one.
    pub fn span(&self) -> Option<(usize, usize)> {
        self.line_start
            .map(|s| (s, self.line_end.unwrap_or(s).max(s)))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match (self.line_start, self.line_end) {
            (None, Some(_)) => Err(ModelError::InvalidFindingSpan(self.rule_id.clone())),
            (Some(0), _) => Err(ModelError::InvalidFindingSpan(self.rule_id.clone())),
            (Some(s), Some(e)) if e < s => {
                Err(ModelError::InvalidFindingSpan(self.rule_id.clone()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedFactor {
    pub factor: String,
    pub weight: f64,
}

/// The weighted quality factors that make up the score. Weights are
/// non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WeightedFactor>", into = "Vec<WeightedFactor>")]
pub struct QualityScheme {
    factors: Vec<WeightedFactor>,
}

impl QualityScheme {
    /// The single-factor scheme `{smell_free: 1.0}`: a snippet scores 1 when
    /// it parses and has no findings, 0 otherwise.
    pub fn binary() -> Self {
        QualityScheme {
            factors: vec![WeightedFactor {
                factor: crate::quality::SMELL_FREE.to_string(),
                weight: 1.0,
            }],
        }
    }

    pub fn factors(&self) -> &[WeightedFactor] {
        &self.factors
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }
}

/// Validates raw `(factor_id, weight)` pairs into a scheme.
pub fn validate_scheme<S: Into<String>>(
    raw: impl IntoIterator<Item = (S, f64)>,
) -> Result<QualityScheme, ModelError> {
    let factors = raw
        .into_iter()
        .map(|(f, w)| WeightedFactor {
            factor: f.into(),
            weight: w,
        })
        .collect::<Vec<_>>();
    QualityScheme::try_from(factors)
}

impl TryFrom<Vec<WeightedFactor>> for QualityScheme {
    type Error = ModelError;

    fn try_from(factors: Vec<WeightedFactor>) -> Result<Self, Self::Error> {
        if factors.is_empty() {
            return Err(ModelError::EmptyScheme);
        }
        for f in &factors {
            if !f.weight.is_finite() || f.weight < 0.0 {
                return Err(ModelError::NegativeWeight {
                    factor: f.factor.clone(),
                    weight: f.weight,
                });
            }
        }
        let sum: f64 = factors.iter().map(|f| f.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ModelError::WeightSum { sum });
        }
        Ok(QualityScheme { factors })
    }
}

impl From<QualityScheme> for Vec<WeightedFactor> {
    fn from(s: QualityScheme) -> Self {
        s.factors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairStructure {
    /// Code followed by fix comments.
    P1,
    /// P1 followed by the original prompt.
    P2,
    /// Code truncated before the first flagged line, then fix comments.
    P3,
}

impl FromStr for RepairStructure {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(RepairStructure::P1),
            "p2" => Ok(RepairStructure::P2),
            "p3" => Ok(RepairStructure::P3),
            other => Err(ModelError::UnknownRepairStructure(other.to_string())),
        }
    }
}

impl fmt::Display for RepairStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairStructure::P1 => "p1",
            RepairStructure::P2 => "p2",
            RepairStructure::P3 => "p3",
        })
    }
}

/// When and how to repair the top suggestion. Repair is attempted at most
/// once per prompt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairPolicy {
    pub tau: f64,
    pub structure: RepairStructure,
    #[serde(default = "RepairPolicy::one")]
    max_attempts: u32,
}

impl RepairPolicy {
    pub const MAX_ATTEMPTS: u32 = 1;

    pub fn new(tau: f64, structure: RepairStructure) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(ModelError::InvalidThreshold(tau));
        }
        Ok(RepairPolicy {
            tau,
            structure,
            max_attempts: Self::MAX_ATTEMPTS,
        })
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_attempts
    }

    fn one() -> u32 {
        Self::MAX_ATTEMPTS
    }
}

impl Default for RepairPolicy {
    fn default() -> Self {
        RepairPolicy {
            tau: 1.0,
            structure: RepairStructure::P1,
            max_attempts: Self::MAX_ATTEMPTS,
        }
    }
}

/// Graded relevance labels (0..=3) for the first `k` ranked items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct RelevanceVector {
    labels: Vec<u8>,
}

impl RelevanceVector {
    pub const MAX_LABEL: u8 = 3;

    pub fn new(labels: Vec<u8>) -> Result<Self, ModelError> {
        if labels.is_empty() {
            return Err(ModelError::EmptyRelevance);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > Self::MAX_LABEL) {
            return Err(ModelError::IllegalRelevance(bad));
        }
        Ok(RelevanceVector { labels })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }
}

impl TryFrom<Vec<u8>> for RelevanceVector {
    type Error = ModelError;

    fn try_from(v: Vec<u8>) -> Result<Self, Self::Error> {
        RelevanceVector::new(v)
    }
}

impl From<RelevanceVector> for Vec<u8> {
    fn from(r: RelevanceVector) -> Self {
        r.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_factor_scheme() {
        let s = validate_scheme([("smell_free", 1.0)]).unwrap();
        assert_eq!(s.m(), 1);
    }

    #[test]
    fn two_factor_scheme() {
        let s = validate_scheme([("a", 0.7), ("b", 0.3)]).unwrap();
        assert_eq!(s.m(), 2);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = validate_scheme([("a", 0.7), ("b", 0.7)]).unwrap_err();
        assert!(matches!(err, ModelError::WeightSum { .. }));
    }

    #[test]
    fn negative_and_empty_schemes_rejected() {
        assert!(matches!(
            validate_scheme([("a", 1.5), ("b", -0.5)]).unwrap_err(),
            ModelError::NegativeWeight { .. }
        ));
        assert!(matches!(
            validate_scheme(Vec::<(String, f64)>::new()).unwrap_err(),
            ModelError::EmptyScheme
        ));
    }

    #[test]
    fn scheme_json_round_trips_through_validation() {
        let s: QualityScheme =
            serde_json::from_str(r#"[{"factor":"a","weight":0.25},{"factor":"b","weight":0.75}]"#)
                .unwrap();
        assert_eq!(s.m(), 2);
        let bad = serde_json::from_str::<QualityScheme>(r#"[{"factor":"a","weight":0.5}]"#);
        assert!(bad.is_err());
    }

    #[test]
    fn language_parsing() {
        assert_eq!("Python".parse::<Language>().unwrap(), Language::Python);
        assert_eq!("java".parse::<Language>().unwrap(), Language::Java);
        assert!("rust".parse::<Language>().is_err());
        assert!(serde_json::from_str::<Language>("\"cobol\"").is_err());
    }

    #[test]
    fn prompt_text_must_be_non_empty() {
        assert!(Prompt::new("p", Language::Python, "", "d", None).is_err());
    }

    #[test]
    fn finding_span_validation() {
        let ok = Finding::new("r", "m", Some(2), Severity::Warning, "t").with_span(2, 4);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.line_start = None;
        assert!(bad.validate().is_err());
        let mut reversed = ok;
        reversed.line_end = Some(1);
        assert!(reversed.validate().is_err());
    }

    #[test]
    fn repair_policy_is_single_attempt() {
        let p = RepairPolicy::new(1.0, RepairStructure::P3).unwrap();
        assert_eq!(p.max_attempts(), 1);
        let parsed: RepairPolicy =
            serde_json::from_str(r#"{"tau":0.5,"structure":"p2"}"#).unwrap();
        assert_eq!(parsed.max_attempts(), 1);
        assert!(RepairPolicy::new(1.5, RepairStructure::P1).is_err());
    }

    #[test]
    fn relevance_labels_bounded() {
        assert!(RelevanceVector::new(vec![0, 1, 2, 3]).is_ok());
        assert!(RelevanceVector::new(vec![4]).is_err());
        assert!(RelevanceVector::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn accepted_schemes_satisfy_weight_laws(raw in prop::collection::vec(0.0f64..10.0, 1..8)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let pairs = raw.iter().enumerate().map(|(i, w)| (format!("f{i}"), w / total));
            if let Ok(scheme) = validate_scheme(pairs) {
                let sum: f64 = scheme.factors().iter().map(|f| f.weight).sum();
                prop_assert!((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE);
                prop_assert!(scheme.factors().iter().all(|f| f.weight >= 0.0));
            }
        }

        #[test]
        fn inventory_positions_are_contiguous(texts in prop::collection::vec(".{0,8}", 0..20)) {
            let prompt = Prompt::new("p", Language::Python, "def f():\n", "d", None).unwrap();
            let inv = SuggestionInventory::from_completions(prompt, texts.clone());
            prop_assert!(inv.validate().is_ok());
            let positions: Vec<usize> = inv.suggestions.iter().map(|s| s.position).collect();
            prop_assert_eq!(positions, (1..=texts.len()).collect::<Vec<_>>());
        }
    }
}
