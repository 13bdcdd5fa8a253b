//! Measurement harness: datasets, compilability, NDCG, agreement and
//! significance statistics, and the end-to-end pipeline report.

pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod stats;
pub mod tables;

pub use dataset::{load_dataset, load_labels, DatasetFormat, DatasetRecord, ManualLabels};
pub use metrics::{
    assign_relevance, compilability_stats, dcg, idcg, model_order_relevance, ndcg_at_k, raw_parse_count, raw_program,
    relevance_by_position, CompilabilityStats,
};
pub use pipeline::{
    run_pipeline, Aggregate, NdcgSummary, PhaseTimings, PipelineConfig, PipelineReport, PromptRow, RepairSummary,
    RepairTrace, ReportMetadata, RowStatus,
};
pub use stats::{cohen_kappa, paired_t_test, student_t_central_mass, TTest};
pub use tables::{compilability_table, ndcg_table, timing_table};
