//! Quality assessment: findings from bundled rules and external analyzers,
//! per-factor values in [0, 1], and the weighted score.

pub mod external;
pub mod rules;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QualityError;
use crate::filter::EligibleSet;
use crate::model::{CodeSuggestion, Finding, Prompt, QualityScheme};
use crate::syntax::{check_syntax, SyntaxVerdict};

pub use external::{
    run_external_analyzer, run_external_analyzer_limited, suppress_region, translate_report,
    AnalyzerSpec, ProcessLimiter, ReportFormat, DEFAULT_MAX_CONCURRENT_ANALYZERS,
};
pub use rules::{run_builtin_rules, BUILTIN_SOURCE};

/// Factor that is 1 for parse-passing code with no findings, else 0.
pub const SMELL_FREE: &str = "smell_free";

/// What a factor gets to look at.
pub struct FactorInput<'a> {
    pub code: &'a str,
    pub findings: &'a [Finding],
    pub verdict: &'a SyntaxVerdict,
}

pub type FactorFn = dyn Fn(&FactorInput<'_>) -> f64 + Send + Sync;

/// Quality factors registered by id.
#[derive(Clone)]
pub struct FactorRegistry {
    factors: BTreeMap<String, Arc<FactorFn>>,
}

impl Default for FactorRegistry {
    fn default() -> Self {
        let mut registry = FactorRegistry {
            factors: BTreeMap::new(),
        };
        registry.register(SMELL_FREE, |input| {
            if input.verdict.ok && input.findings.is_empty() {
                1.0
            } else {
                0.0
            }
        });
        registry
    }
}

impl std::fmt::Debug for FactorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factors.keys()).finish()
    }
}

impl FactorRegistry {
    /// Registers (or replaces) a factor. Values are clamped to [0, 1] when
    /// evaluated.
    pub fn register<F>(&mut self, id: impl Into<String>, f: F)
    where
        F: Fn(&FactorInput<'_>) -> f64 + Send + Sync + 'static,
    {
        self.factors.insert(id.into(), Arc::new(f));
    }

    pub fn contains(&self, id: &str) -> bool {
        self.factors.contains_key(id)
    }

    pub fn evaluate(&self, id: &str, input: &FactorInput<'_>) -> Result<f64, QualityError> {
        let f = self
            .factors
            .get(id)
            .ok_or_else(|| QualityError::UnknownFactor(id.to_string()))?;
        let v = f(input);
        Ok(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
    }
}

/// Evaluates one bundled factor.
pub fn quality_factor(
    factor_id: &str,
    code: &str,
    findings: &[Finding],
    verdict: &SyntaxVerdict,
) -> Result<f64, QualityError> {
    FactorRegistry::default().evaluate(
        factor_id,
        &FactorInput {
            code,
            findings,
            verdict,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorValue {
    pub factor: String,
    pub value: f64,
}

/// Weighted sum of factor values. Factor ids must match the scheme's, in
/// the same order.
pub fn quality_score(factors: &[FactorValue], scheme: &QualityScheme) -> Result<f64, QualityError> {
    let expected: Vec<&str> = scheme.factors().iter().map(|f| f.factor.as_str()).collect();
    let got: Vec<&str> = factors.iter().map(|f| f.factor.as_str()).collect();
    if expected != got {
        return Err(QualityError::SchemeMismatch {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            got: got.iter().map(|s| s.to_string()).collect(),
        });
    }
    let score: f64 = scheme
        .factors()
        .iter()
        .zip(factors)
        .map(|(w, q)| w.weight * q.value)
        .sum();
    Ok(score.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub suggestion_position: usize,
    pub findings: Vec<Finding>,
    pub factor_values: Vec<FactorValue>,
    pub score: f64,
}

/// Inclusive line range the prompt occupies inside `code`, located by
/// searching for the prompt text.
pub fn prompt_region(code: &str, prompt: &Prompt) -> Option<(usize, usize)> {
    let needle = prompt.text.trim_end();
    if needle.is_empty() {
        return None;
    }
    let start = code.find(needle)?;
    let end = start + needle.len() - 1;
    let line_of = |offset: usize| code.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1;
    Some((line_of(start), line_of(end)))
}

/// Scores suggestions under a scheme using the bundled rules and any
/// configured external analyzers.
#[derive(Debug, Clone)]
pub struct Assessor {
    pub scheme: QualityScheme,
    pub registry: FactorRegistry,
    pub analyzers: Vec<AnalyzerSpec>,
    pub builtin_rules: bool,
    limiter: Arc<ProcessLimiter>,
}

impl std::fmt::Debug for ProcessLimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ProcessLimiter")
    }
}

impl Default for Assessor {
    fn default() -> Self {
        Assessor::new(QualityScheme::binary())
    }
}

impl Assessor {
    pub fn new(scheme: QualityScheme) -> Self {
        Assessor {
            scheme,
            registry: FactorRegistry::default(),
            analyzers: Vec::new(),
            builtin_rules: true,
            limiter: Arc::new(ProcessLimiter::new(DEFAULT_MAX_CONCURRENT_ANALYZERS)),
        }
    }

    pub fn with_analyzers(mut self, analyzers: Vec<AnalyzerSpec>) -> Self {
        self.analyzers = analyzers;
        self
    }

    pub fn with_max_processes(mut self, max: usize) -> Self {
        self.limiter = Arc::new(ProcessLimiter::new(max));
        self
    }

    /// Fails early on unknown factors or malformed analyzer specs.
    pub fn validate(&self) -> Result<(), QualityError> {
        for f in self.scheme.factors() {
            if !self.registry.contains(&f.factor) {
                return Err(QualityError::UnknownFactor(f.factor.clone()));
            }
        }
        self.analyzers.iter().try_for_each(AnalyzerSpec::validate)
    }

    pub fn findings(&self, sugg: &CodeSuggestion, prompt: &Prompt) -> Result<Vec<Finding>, QualityError> {
        let region = prompt_region(&sugg.text, prompt);
        let mut findings = if self.builtin_rules {
            run_builtin_rules(&sugg.text, sugg.language)
        } else {
            Vec::new()
        };
        for spec in self.analyzers.iter().filter(|a| a.language == sugg.language) {
            findings.extend(run_external_analyzer_limited(spec, &sugg.text, region, &self.limiter)?);
        }
        Ok(suppress_region(findings, region))
    }

    pub fn assess(&self, sugg: &CodeSuggestion, prompt: &Prompt) -> Result<QualityAssessment, QualityError> {
        let verdict = check_syntax(&sugg.text, sugg.language)?;
        let findings = self.findings(sugg, prompt)?;
        let input = FactorInput {
            code: &sugg.text,
            findings: &findings,
            verdict: &verdict,
        };
        let factor_values = self
            .scheme
            .factors()
            .iter()
            .map(|f| {
                Ok(FactorValue {
                    factor: f.factor.clone(),
                    value: self.registry.evaluate(&f.factor, &input)?,
                })
            })
            .collect::<Result<Vec<_>, QualityError>>()?;
        let score = quality_score(&factor_values, &self.scheme)?;
        Ok(QualityAssessment {
            suggestion_position: sugg.position,
            findings,
            factor_values,
            score,
        })
    }

    /// Assesses every eligible suggestion, in parallel, in input order.
    pub fn assess_all(&self, eligible: &EligibleSet) -> Result<Vec<QualityAssessment>, QualityError> {
        eligible
            .cleaned
            .par_iter()
            .map(|s| self.assess(s, &eligible.prompt))
            .collect()
    }
}
