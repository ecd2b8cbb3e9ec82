//! Synthetic data, recovery metrics, configuration and the end-to-end pipeline.

mod bench;
mod config;
mod metrics;
mod pipeline;
mod synth;

pub use bench::{bench, recovery_sweep, BenchReport};
pub use config::{AnalysisStage, Config, DictionarySource, DictionaryStage, InterventionStage, PartitionStage, SolverStage};
pub use metrics::{eval_recovery, removed_energy_ratio, RecoveryMetrics, SUPPORT_THRESHOLD};
pub use pipeline::{run_pipeline, AnalysisSummary, DictionarySummary, InterventionSummary, RunReport, RUN_MANIFEST};
pub use synth::{
    concept_name, gen_synthetic, planted_low_rank, planted_subspace_points, PlantedSample, SyntheticData, SyntheticSpec,
};
