use thiserror::Error;

use crate::model::Language;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("quality scheme weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("factor `{factor}` has invalid weight {weight}")]
    NegativeWeight { factor: String, weight: f64 },
    #[error("quality scheme has no factors")]
    EmptyScheme,
    #[error("prompt `{0}` has empty text")]
    EmptyPromptText(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("unknown repair structure `{0}` (expected p1, p2 or p3)")]
    UnknownRepairStructure(String),
    #[error("repair threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("inventory declares n={declared} but holds {actual} suggestions")]
    InventoryCount { declared: usize, actual: usize },
    #[error("suggestion at index {index} has position {position}; positions must run 1..=n")]
    NonContiguousPositions { index: usize, position: usize },
    #[error("finding `{0}` has an invalid line span")]
    InvalidFindingSpan(String),
    #[error("relevance vector is empty")]
    EmptyRelevance,
    #[error("relevance label {0} outside 0..=3")]
    IllegalRelevance(u8),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntaxError {
    #[error("no grammar loaded for {0}")]
    ParserUnavailable(Language),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("target `{0}` not found in snippet")]
    TargetNotFound(String),
    #[error("finding span {start}..={end} outside snippet of {lines} lines")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        lines: usize,
    },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("unknown quality factor `{0}`")]
    UnknownFactor(String),
    #[error("factor values {got:?} do not match scheme factors {expected:?}")]
    SchemeMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("analyzer `{name}` timed out after {timeout_ms} ms")]
    AnalyzerTimeout { name: String, timeout_ms: u64 },
    #[error("analyzer `{name}` crashed with exit code {exit_code:?}: {stderr_excerpt}")]
    AnalyzerCrashed {
        name: String,
        exit_code: Option<i32>,
        stderr_excerpt: String,
    },
    #[error("cannot parse report from analyzer `{name}`: {reason}")]
    ReportParse { name: String, reason: String },
    #[error("invalid analyzer spec `{name}`: {reason}")]
    InvalidAnalyzer { name: String, reason: String },
    #[error("analyzer i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("assessments do not match eligible suggestions: {0}")]
    AssessmentMismatch(String),
    #[error("ranked inventory is empty")]
    EmptyRank,
}

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("repair prompt needs at least one finding")]
    NoFindings,
    #[error("P3 repair prompt needs at least one finding with a line number")]
    NoLinedFinding,
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("authentication variable `{0}` is not set")]
    AuthMissing(String),
    #[error("no replay fixture for key {0}")]
    FixtureMiss(String),
    #[error("backend returned {got} completions, expected {expected}")]
    TruncatedResponse { expected: usize, got: usize },
    #[error("fixture already holds key {0}")]
    DuplicateKey(String),
    #[error("expected {expected} completions to record, got {got}")]
    CompletionCount { expected: usize, got: usize },
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("malformed fixture line {line}: {reason}")]
    MalformedFixture { line: usize, reason: String },
    #[error("fixture i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line_no}: {reason}")]
    MalformedRecord { line_no: usize, reason: String },
    #[error("inventories and eligible sets are not aligned: {0}")]
    Alignment(String),
    #[error("missing manual relevance label for position {0}")]
    MissingLabel(usize),
    #[error("illegal manual label {label} for position {position}")]
    IllegalLabel { position: usize, label: u8 },
    #[error("rater vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report serialization: {0}")]
    Serialize(String),
}
