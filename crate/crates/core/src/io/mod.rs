//! Dataset ingestion and synthesis, configuration files, and result emission.

pub mod config;
pub mod emit;
pub mod records;
pub mod synth;

pub use config::FlatConfig;
pub use emit::{
    emit_correlation, emit_robustness, emit_run, emit_sweep, load_sweep, SweepArtifact,
};
pub use records::{load_profile, load_records, save_profile, save_records};
pub use synth::{
    default_profile, default_spec, generate_synthetic, load_spec, EvaluatorChannel, GtDistribution,
    SyntheticGenSpec,
};
