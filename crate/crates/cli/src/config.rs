//! The merged run configuration: JSON config file, then command-line flags
//! on top, validated before any work starts.

use std::fs;
use std::path::{Path, PathBuf};

use codesift_core::eval::{load_labels, DatasetFormat, ManualLabels, PipelineConfig};
use codesift_core::generation::{FieldMapping, RetryPolicy};
use codesift_core::quality::AnalyzerSpec;
use codesift_core::{
    validate_scheme, Assessor, BackendConfig, BackendKind, Language, QualityScheme, RepairPolicy,
    RepairStructure,
};
use serde::Deserialize;

use crate::args::{BackendArg, FormatArg, LanguageArg, PipelineArgs, ScoringArgs, StructureArg};
use crate::error::CliError;

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scheme: Option<QualityScheme>,
    pub analyzers: Option<Vec<AnalyzerSpec>>,
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
    pub language: Option<Language>,
    pub backend: Option<String>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub auth_env: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub n: Option<usize>,
    pub max_tokens: Option<u32>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub tau: Option<f64>,
    pub repair_structure: Option<RepairStructure>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub timings: Option<bool>,
    pub max_inflight: Option<usize>,
    pub retry: Option<RetryPolicy>,
    pub request_timeout_ms: Option<u64>,
    pub fields: Option<FieldMapping>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&raw).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }
}

/// Everything `pipeline` needs, fully validated.
#[derive(Debug)]
pub struct PipelineSettings {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    pub language: Language,
    pub backend: BackendConfig,
    pub pipeline: PipelineConfig,
    pub out: Option<PathBuf>,
    pub tables: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn parse_weights(spec: &str) -> Result<QualityScheme, CliError> {
    let pairs = spec
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (factor, weight) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("weight `{pair}` is not FACTOR=W")))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("weight `{pair}` is not a number")))?;
            Ok((factor.trim().to_string(), weight))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    validate_scheme(pairs).map_err(config_err)
}

fn load_analyzers(path: &Path) -> Result<Vec<AnalyzerSpec>, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read analyzers {}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| CliError::Config(format!("analyzers {}: {e}", path.display())))
}

/// Scheme and analyzers from flags, falling back to the config file.
pub fn resolve_assessor(scoring: &ScoringArgs, file: &FileConfig) -> Result<Assessor, CliError> {
    let scheme = match &scoring.weights {
        Some(spec) => parse_weights(spec)?,
        None => file.scheme.clone().unwrap_or_else(QualityScheme::binary),
    };
    let analyzers = match &scoring.analyzers {
        Some(path) => load_analyzers(path)?,
        None => file.analyzers.clone().unwrap_or_default(),
    };
    let assessor = Assessor::new(scheme).with_analyzers(analyzers);
    assessor.validate().map_err(config_err)?;
    Ok(assessor)
}

pub fn resolve_policy(tau: Option<f64>, structure: Option<RepairStructure>) -> Result<RepairPolicy, CliError> {
    RepairPolicy::new(tau.unwrap_or(1.0), structure.unwrap_or(RepairStructure::P1)).map_err(config_err)
}

impl From<LanguageArg> for Language {
    fn from(l: LanguageArg) -> Self {
        match l {
            LanguageArg::Python => Language::Python,
            LanguageArg::Java => Language::Java,
        }
    }
}

impl From<StructureArg> for RepairStructure {
    fn from(s: StructureArg) -> Self {
        match s {
            StructureArg::P1 => RepairStructure::P1,
            StructureArg::P2 => RepairStructure::P2,
            StructureArg::P3 => RepairStructure::P3,
        }
    }
}

fn format_of(arg: Option<FormatArg>, file: Option<&str>) -> Result<DatasetFormat, CliError> {
    Ok(match (arg, file) {
        (Some(FormatArg::JsonlHumaneval), _) => DatasetFormat::JsonlHumaneval,
        (Some(FormatArg::JsonlGeneric), _) => DatasetFormat::JsonlGeneric,
        (Some(FormatArg::CsvPrompts), _) => DatasetFormat::CsvPrompts,
        (None, Some(s)) => s.parse().map_err(config_err)?,
        (None, None) => DatasetFormat::JsonlHumaneval,
    })
}

fn backend_of(arg: Option<BackendArg>, file: Option<&str>) -> Result<BackendKind, CliError> {
    Ok(match (arg, file) {
        (Some(BackendArg::Replay), _) => BackendKind::Replay,
        (Some(BackendArg::HttpCompletion), _) => BackendKind::HttpCompletion,
        (Some(BackendArg::HttpChat), _) => BackendKind::HttpChat,
        (None, Some(s)) => s.parse().map_err(config_err)?,
        (None, None) => BackendKind::Replay,
    })
}

pub fn resolve_pipeline(args: &PipelineArgs) -> Result<PipelineSettings, CliError> {
    let file = FileConfig::load(args.scoring.config.as_deref())?;
    let dataset = args
        .dataset
        .clone()
        .or_else(|| file.dataset.clone())
        .ok_or_else(|| CliError::Config("--dataset is required".into()))?;
    let format = format_of(args.format, file.format.as_deref())?;
    let language = args.language.map(Language::from).or(file.language).unwrap_or(Language::Python);
    let kind = backend_of(args.backend, file.backend.as_deref())?;
    let model = args
        .model
        .clone()
        .or_else(|| file.model.clone())
        .ok_or_else(|| CliError::Config("--model is required".into()))?;

    let mut backend = match kind {
        BackendKind::Replay => {
            let fixtures = args
                .fixtures
                .clone()
                .or_else(|| file.fixtures.clone())
                .ok_or_else(|| CliError::Config("the replay backend needs --fixtures".into()))?;
            BackendConfig::replay(fixtures)
        }
        _ => {
            let endpoint = args
                .endpoint
                .clone()
                .or_else(|| file.endpoint.clone())
                .ok_or_else(|| CliError::Config("http backends need --endpoint".into()))?;
            BackendConfig::http(kind, endpoint)
        }
    };
    backend.auth_env_var = args.auth_env.clone().or_else(|| file.auth_env.clone());
    if let Some(v) = file.max_inflight {
        backend.max_inflight = v;
    }
    if let Some(v) = file.retry {
        backend.retry = v;
    }
    if let Some(v) = file.request_timeout_ms {
        backend.request_timeout_ms = v;
    }
    if let Some(v) = file.fields.clone() {
        backend.fields = v;
    }
    backend.validate().map_err(config_err)?;

    let assessor = resolve_assessor(&args.scoring, &file)?;
    let policy = resolve_policy(
        args.tau.or(file.tau),
        args.repair_structure.map(RepairStructure::from).or(file.repair_structure),
    )?;
    let labels: Option<ManualLabels> = args
        .labels
        .clone()
        .or_else(|| file.labels.clone())
        .map(|p| load_labels(&p).map_err(|e| CliError::Config(format!("labels {}: {e}", p.display()))))
        .transpose()?;

    let mut pipeline = PipelineConfig::new(model, kind);
    pipeline.n = args.n.or(file.n).unwrap_or(pipeline.n);
    pipeline.max_new_tokens = args.max_tokens.or(file.max_tokens).unwrap_or(pipeline.max_new_tokens);
    pipeline.temperature = file.temperature.unwrap_or(pipeline.temperature);
    pipeline.top_p = file.top_p.unwrap_or(pipeline.top_p);
    pipeline.scheme = assessor.scheme.clone();
    pipeline.analyzers = assessor.analyzers.clone();
    pipeline.policy = policy;
    pipeline.jobs = args.jobs.or(file.jobs).unwrap_or(0);
    pipeline.labels = labels;
    pipeline.timings = args.timings || file.timings.unwrap_or(false);
    pipeline.request("").validate().map_err(config_err)?;

    Ok(PipelineSettings {
        dataset,
        format,
        language,
        backend,
        pipeline,
        out: args.out.clone().or_else(|| file.out.clone()),
        tables: args.tables.clone(),
    })
}
