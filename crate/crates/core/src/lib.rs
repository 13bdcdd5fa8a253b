//! Post-processing for generated code: a syntax gate with cleanup
//! heuristics, quality scoring and ranking, single-round repair prompts, and
//! an evaluation harness.

pub mod error;
pub mod eval;
pub mod filter;
pub mod generation;
pub mod model;
pub mod quality;
pub mod rank;
pub mod repair;
pub mod syntax;

pub use error::{EvalError, FilterError, GenerationError, ModelError, QualityError, RankError, RepairError, SyntaxError};
pub use filter::{clean, filter_inventory, DropReason, DroppedSuggestion, EligibleSet};
pub use generation::{
    backend_from_config, generate, record_fixture, BackendConfig, BackendKind, GenerationBackend, GenerationRequest,
    HttpBackend, ReplayBackend,
};
pub use model::{
    validate_scheme, CodeSuggestion, Finding, Language, Prompt, QualityScheme, RelevanceVector, RepairContext,
    RepairPolicy, RepairStructure, Severity, SuggestionInventory, WeightedFactor,
};
pub use quality::{quality_factor, quality_score, AnalyzerSpec, Assessor, FactorValue, QualityAssessment, SMELL_FREE};
pub use rank::{rank, top1, RankedEntry, RankedInventory};
pub use repair::{build_p1, build_p2, build_p3, build_repair_prompt, needs_repair, repair_round, RepairPrompt};
pub use syntax::{check_syntax, top_level_units, SyntaxVerdict, UnitKind, UnitSpan};
