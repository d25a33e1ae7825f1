//! Table-shaped analyses built from the standalone metrics, and their reports.

pub mod baselines;
pub mod export;
pub mod pipelines;
pub mod report;

pub use baselines::{attribute_baselines, median, ClassSets};
pub use export::{export_embeddings_for_projection, load_projection_export};
pub use pipelines::{
    bleu_trap_analysis, noise_dependency_report, prefix_strip_analysis, run_main_eval, NoiseEmbeddings,
    PairedEmbeddings, ProtocolConfig, DEFAULT_N_WAYS, DEFAULT_RUNS, DEFAULT_SEED,
};
pub use report::{
    fingerprint, format_percent, parse_report_json, relative_improvement, render_report, Metric, MetricKind,
    MetricReport, ReportFormat, ReportLayout, MAIN_TABLE_COLUMNS,
};
