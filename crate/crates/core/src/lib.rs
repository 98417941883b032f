//! Simulation engine for adversary-resilient, cost-aware proof-of-quality.
//!
//! Sampled evaluators score an inference output, a defense rule turns the
//! scores into a consensus, and the consensus drives cost-aware rewards for
//! the inference node and the evaluators. Trust weights track how far each
//! evaluator strays from consensus. A configurable adversary controls a
//! fixed fraction of the evaluator pool.
//!
//! The crate is organized bottom-up:
//!
//! - [`cost`]: latency to cost normalization
//! - [`consensus`]: mean, median, trimmed mean, trust-weighted mean
//! - [`trust`]: deviation and multiplicative trust updates
//! - [`rewards`]: inference and evaluator rewards
//! - [`adversary`]: malicious set selection and score attacks
//! - [`engine`]: the round protocol and Monte Carlo runs
//! - [`sweep`]: parameter sweeps
//! - [`metrics`]: ground-truth proxy, correlations, robustness deltas
//! - [`io`]: record/profile/config files and result artifacts

pub mod adversary;
pub mod consensus;
pub mod cost;
pub mod engine;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rewards;
pub mod sweep;
pub mod trust;

pub use adversary::{apply_attack, select_malicious, AttackKind, AttackSpec};
pub use consensus::{ConsensusInput, ConsensusRule};
pub use engine::{run_round, run_simulation, EngineState, RunResult, RunSummary};
pub use error::{PoqError, Result};
pub use metrics::{
    consensus_alignment, gt_score, pearson, spearman, token_f1, Coefficient, CorrelationReport,
};
pub use model::{
    validate_dataset, LogRetention, NetworkProfile, RewardParams, RoundOutcome, ScoreRecord,
    SimConfig, Task, TrustParams, Violation,
};
pub use sweep::{run_grid, run_sweep, AxisValue, GridRun, SweepAxis};
pub use trust::TrustState;
