use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetRecord, ManualLabels};
use super::metrics::{assign_relevance, model_order_relevance, ndcg_at_k, raw_parse_count, CompilabilityStats};
use super::stats::{paired_t_test, TTest};
use crate::error::{EvalError, RepairError};
use crate::filter::filter_inventory;
use crate::generation::{generate, BackendKind, GenerationBackend, GenerationRequest};
use crate::model::{Language, QualityScheme, RepairPolicy, RepairStructure};
use crate::quality::{AnalyzerSpec, Assessor};
use crate::rank::{rank, RankedInventory};
use crate::repair::{regenerate, repair_prompt_for};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model_id: String,
    pub backend_kind: BackendKind,
    pub n: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub scheme: QualityScheme,
    pub analyzers: Vec<AnalyzerSpec>,
    pub policy: RepairPolicy,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub labels: Option<ManualLabels>,
    pub timings: bool,
}

impl PipelineConfig {
    pub fn new(model_id: impl Into<String>, backend_kind: BackendKind) -> Self {
        let template = GenerationRequest::new("", "", backend_kind);
        PipelineConfig {
            model_id: model_id.into(),
            backend_kind,
            n: template.n,
            max_new_tokens: template.max_new_tokens,
            temperature: template.temperature,
            top_p: template.top_p,
            scheme: QualityScheme::binary(),
            analyzers: Vec::new(),
            policy: RepairPolicy::default(),
            jobs: 0,
            labels: None,
            timings: false,
        }
    }

    pub fn request(&self, prompt_text: &str) -> GenerationRequest {
        GenerationRequest {
            prompt_text: prompt_text.to_string(),
            n: self.n,
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            top_p: self.top_p,
            model_id: self.model_id.clone(),
        }
    }

    pub fn assessor(&self) -> Assessor {
        Assessor::new(self.scheme.clone()).with_analyzers(self.analyzers.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub filtering_s: f64,
    pub ranking_s: f64,
    pub repair_prompt_s: f64,
    pub total_s: f64,
}

impl PhaseTimings {
    pub fn new(filtering_s: f64, ranking_s: f64, repair_prompt_s: f64) -> Self {
        PhaseTimings {
            filtering_s,
            ranking_s,
            repair_prompt_s,
            total_s: filtering_s + ranking_s + repair_prompt_s,
        }
    }

    fn mean(items: &[PhaseTimings]) -> Option<PhaseTimings> {
        if items.is_empty() {
            return None;
        }
        let k = items.len() as f64;
        Some(PhaseTimings::new(
            items.iter().map(|t| t.filtering_s).sum::<f64>() / k,
            items.iter().map(|t| t.ranking_s).sum::<f64>() / k,
            items.iter().map(|t| t.repair_prompt_s).sum::<f64>() / k,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RepairTrace {
    pub triggered: bool,
    pub rounds: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<RepairStructure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_after: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top1_score_after: Option<f64>,
    /// The repaired inventory holds at least one snippet with Q = 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_after: Option<bool>,
    /// The repaired top-1 still scores below the threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_threshold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRow {
    pub dataset: String,
    pub task_id: String,
    pub language: Language,
    pub status: RowStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub n: usize,
    pub raw_parse_ok: usize,
    pub x: usize,
    pub drop_reasons: BTreeMap<String, usize>,
    /// Original positions in ranked order.
    pub framework_order: Vec<usize>,
    /// Scores in ranked order.
    pub scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top1_score: Option<f64>,
    pub good: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance_model: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance_framework: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_model: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_framework: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_note: Option<String>,
    pub repair: RepairTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<PhaseTimings>,
}

impl PromptRow {
    fn empty(record: &DatasetRecord) -> Self {
        PromptRow {
            dataset: record.source_dataset.clone(),
            task_id: record.task_id.clone(),
            language: record.language,
            status: RowStatus::Ok,
            error: None,
            n: 0,
            raw_parse_ok: 0,
            x: 0,
            drop_reasons: BTreeMap::new(),
            framework_order: Vec::new(),
            scores: Vec::new(),
            top1_score: None,
            good: false,
            relevance_model: None,
            relevance_framework: None,
            ndcg_model: None,
            ndcg_framework: None,
            ndcg_note: None,
            repair: RepairTrace::default(),
            timings: None,
        }
    }

    fn fail(mut self, code: &str, err: impl std::fmt::Display) -> Self {
        self.status = RowStatus::Failed;
        self.error = Some(format!("{code}: {err}"));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdcgSummary {
    pub prompts: usize,
    pub model_top_rel3: usize,
    pub framework_top_rel3: usize,
    pub mean_model: Option<f64>,
    pub mean_framework: Option<f64>,
    pub t_test: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSummary {
    pub triggered: usize,
    pub skipped: usize,
    pub good_after: usize,
    /// Percentage of triggered prompts whose repaired inventory is good.
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// "python", "java" or "all".
    pub language: String,
    pub prompts: usize,
    pub failed: usize,
    pub compilability: CompilabilityStats,
    pub good_prompts: usize,
    pub ndcg: NdcgSummary,
    pub repair: RepairSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_timings: Option<PhaseTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub model: String,
    pub backend: BackendKind,
    pub n: usize,
    pub max_new_tokens: u32,
    pub tau: f64,
    pub repair_structure: RepairStructure,
    pub max_repair_attempts: u32,
    pub scheme: QualityScheme,
    pub analyzers: Vec<String>,
    /// "file" when manual labels were supplied, otherwise "assumed".
    pub relevance_labels: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<PromptRow>,
    pub aggregates: Vec<Aggregate>,
}

impl PipelineReport {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.status == RowStatus::Failed)
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        serde_json::to_string_pretty(self).map_err(|e| EvalError::Serialize(e.to_string()))
    }

    pub fn aggregate(&self, language: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.language == language)
    }
}

fn labels_for(ranked: &RankedInventory, cfg: &PipelineConfig) -> Option<BTreeMap<usize, u8>> {
    match &cfg.labels {
        Some(all) => all.get(&ranked.prompt.id).cloned(),
        None => Some(
            ranked
                .entries
                .iter()
                .filter(|e| e.score() >= 1.0)
                .map(|e| (e.suggestion.position, super::metrics::IDEAL_LABEL))
                .collect(),
        ),
    }
}

fn secs(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn process(record: &DatasetRecord, cfg: &PipelineConfig, backend: &dyn GenerationBackend, assessor: &Assessor) -> PromptRow {
    let mut row = PromptRow::empty(record);
    let prompt = match record.to_prompt() {
        Ok(p) => p,
        Err(e) => return row.fail("invalid_prompt", e),
    };
    let request = cfg.request(&prompt.text);
    let inventory = match generate(&prompt, &request, backend) {
        Ok(inv) => inv,
        Err(e) => return row.fail("generation", e),
    };
    row.n = inventory.n;
    row.raw_parse_ok = raw_parse_count(&inventory);

    let started = Instant::now();
    let eligible = filter_inventory(&inventory);
    let filtering_s = secs(started);
    row.x = eligible.x;
    for d in &eligible.dropped {
        *row.drop_reasons.entry(d.reason.code().to_string()).or_default() += 1;
    }

    let started = Instant::now();
    let ranked = match assessor.assess_all(&eligible).map_err(|e| e.to_string()).and_then(|a| rank(&eligible, &a).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return row.fail("quality", e),
    };
    let ranking_s = secs(started);
    row.framework_order = ranked.rank_to_position.clone();
    row.scores = ranked.entries.iter().map(|e| e.score()).collect();
    row.top1_score = ranked.entries.first().map(|e| e.score());
    row.good = ranked.entries.iter().any(|e| e.score() >= 1.0);

    if ranked.is_empty() {
        row.ndcg_note = Some("no eligible snippets".into());
    } else {
        let labels = labels_for(&ranked, cfg);
        let rel = model_order_relevance(&ranked, labels.as_ref())
            .and_then(|m| assign_relevance(&ranked, labels.as_ref()).map(|f| (m, f)));
        match rel {
            Ok((model, framework)) => {
                row.ndcg_model = Some(ndcg_at_k(&model));
                row.ndcg_framework = Some(ndcg_at_k(&framework));
                row.relevance_model = Some(model.labels().to_vec());
                row.relevance_framework = Some(framework.labels().to_vec());
            }
            Err(e) => row.ndcg_note = Some(e.to_string()),
        }
    }

    let started = Instant::now();
    let repair_prompt = match repair_prompt_for(&ranked, &cfg.policy) {
        Ok(rp) => rp,
        Err(RepairError::Rank(_)) => {
            row.repair.skipped = Some("no eligible snippets".into());
            None
        }
        Err(e) => {
            row.repair.triggered = true;
            row.repair.structure = Some(cfg.policy.structure);
            row.repair.skipped = Some(e.to_string());
            None
        }
    };
    let repair_prompt_s = secs(started);
    if cfg.timings {
        row.timings = Some(PhaseTimings::new(filtering_s, ranking_s, repair_prompt_s));
    }

    let Some(rp) = repair_prompt else {
        return row;
    };
    row.repair.triggered = true;
    row.repair.rounds = 1;
    row.repair.structure = Some(rp.structure);
    row.repair.target_position = Some(rp.target_position);
    row.repair.prompt_text = Some(rp.text.clone());

    let repaired = match regenerate(&ranked, &rp, backend, &request) {
        Ok(inv) => inv,
        Err(e) => return row.fail("repair_generation", e),
    };
    let eligible_after = filter_inventory(&repaired);
    let ranked_after = match assessor
        .assess_all(&eligible_after)
        .map_err(|e| e.to_string())
        .and_then(|a| rank(&eligible_after, &a).map_err(|e| e.to_string()))
    {
        Ok(r) => r,
        Err(e) => return row.fail("repair_quality", e),
    };
    let top_after = ranked_after.entries.first().map(|e| e.score());
    row.repair.x_after = Some(eligible_after.x);
    row.repair.top1_score_after = top_after;
    row.repair.good_after = Some(ranked_after.entries.iter().any(|e| e.score() >= 1.0));
    row.repair.below_threshold = Some(top_after.map_or(true, |s| s < cfg.policy.tau));
    row
}

fn summarize(language: &str, rows: &[&PromptRow]) -> Aggregate {
    let done: Vec<&&PromptRow> = rows.iter().filter(|r| r.n > 0).collect();
    let compilability = CompilabilityStats::from_counts(
        done.iter().map(|r| r.n).sum(),
        done.iter().map(|r| r.raw_parse_ok).sum(),
        done.iter().map(|r| r.x).sum(),
        done.len(),
        done.iter().filter(|r| r.x > 0).count(),
    );
    let scored: Vec<&&PromptRow> = rows
        .iter()
        .filter(|r| r.ndcg_model.is_some() && r.ndcg_framework.is_some())
        .collect();
    let model: Vec<f64> = scored.iter().filter_map(|r| r.ndcg_model).collect();
    let framework: Vec<f64> = scored.iter().filter_map(|r| r.ndcg_framework).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let top_is_3 = |rel: &Option<Vec<u8>>| rel.as_ref().and_then(|v| v.first()) == Some(&3);
    let ndcg = NdcgSummary {
        prompts: scored.len(),
        model_top_rel3: scored.iter().filter(|r| top_is_3(&r.relevance_model)).count(),
        framework_top_rel3: scored.iter().filter(|r| top_is_3(&r.relevance_framework)).count(),
        mean_model: mean(&model),
        mean_framework: mean(&framework),
        t_test: paired_t_test(&framework, &model).ok(),
    };
    let triggered: Vec<&&PromptRow> = rows.iter().filter(|r| r.repair.triggered).collect();
    let skipped = triggered.iter().filter(|r| r.repair.skipped.is_some()).count();
    let good_after = triggered.iter().filter(|r| r.repair.good_after == Some(true)).count();
    let repair = RepairSummary {
        triggered: triggered.len(),
        skipped,
        good_after,
        success_rate: if triggered.is_empty() {
            0.0
        } else {
            good_after as f64 * 100.0 / triggered.len() as f64
        },
    };
    let timings: Vec<PhaseTimings> = rows.iter().filter_map(|r| r.timings).collect();
    Aggregate {
        language: language.to_string(),
        prompts: rows.len(),
        failed: rows.iter().filter(|r| r.status == RowStatus::Failed).count(),
        compilability,
        good_prompts: rows.iter().filter(|r| r.good).count(),
        ndcg,
        repair,
        mean_timings: PhaseTimings::mean(&timings),
    }
}

/// Runs every record through generate, filter, score, rank and at most one
/// repair round. Per-prompt failures are recorded in their rows.
pub fn run_pipeline(
    records: &[DatasetRecord],
    cfg: &PipelineConfig,
    backend: &dyn GenerationBackend,
) -> Result<PipelineReport, EvalError> {
    let assessor = cfg.assessor();
    assessor
        .validate()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let mut rows: Vec<PromptRow> =
        pool.install(|| records.par_iter().map(|r| process(r, cfg, backend, &assessor)).collect());
    rows.sort_by(|a, b| (&a.dataset, &a.task_id).cmp(&(&b.dataset, &b.task_id)));

    let mut aggregates = Vec::new();
    for lang in [Language::Java, Language::Python] {
        let subset: Vec<&PromptRow> = rows.iter().filter(|r| r.language == lang).collect();
        if !subset.is_empty() {
            aggregates.push(summarize(lang.as_str(), &subset));
        }
    }
    aggregates.push(summarize("all", &rows.iter().collect::<Vec<_>>()));

    Ok(PipelineReport {
        metadata: ReportMetadata {
            model: cfg.model_id.clone(),
            backend: cfg.backend_kind,
            n: cfg.n,
            max_new_tokens: cfg.max_new_tokens,
            tau: cfg.policy.tau,
            repair_structure: cfg.policy.structure,
            max_repair_attempts: cfg.policy.max_attempts(),
            scheme: cfg.scheme.clone(),
            analyzers: cfg.analyzers.iter().map(|a| a.name.clone()).collect(),
            relevance_labels: if cfg.labels.is_some() { "file" } else { "assumed" }.to_string(),
        },
        rows,
        aggregates,
    })
}
