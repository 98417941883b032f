use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use poq_core::io::FlatConfig;
use poq_core::LogRetention;

#[derive(Debug, Parser)]
#[command(
    name = "poq",
    version,
    about = "Proof-of-quality simulation: runs, sweeps and reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its summary, tables and round log.
    Simulate(SimulateArgs),
    /// Run one simulation per point of a parameter grid.
    Sweep(SweepArgs),
    /// Reports from stored records or sweep artifacts.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Generate a synthetic record set and its network profile.
    Synth(SynthArgs),
    /// Check a record set, optionally against a network profile.
    Validate(ValidateArgs),
}

/// Where the score records come from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Line-delimited score records. Without it a synthetic set is generated.
    #[arg(long, requires = "profile")]
    pub records: Option<PathBuf>,
    /// Network profile (latencies) matching `--records`.
    #[arg(long, requires = "records")]
    pub profile: Option<PathBuf>,
    /// Size of the generated synthetic set.
    #[arg(long, default_value_t = 2000)]
    pub synth_n: usize,
    /// Seed of the generated synthetic set.
    #[arg(long, default_value_t = 0)]
    pub synth_seed: u64,
}

/// Simulation parameters. Unset flags fall back to `--config`, then to the
/// built-in defaults shown in brackets.
#[derive(Debug, Default, Args)]
pub struct SimArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rounds T [5000]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Evaluators sampled per round, K [3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Defense rule: mean, median, trimmed_mean, adaptive_weighted [mean]
    #[arg(long)]
    pub rule: Option<String>,
    /// Trim ratio gamma [0.2]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Inference quality coefficient [1.0]
    #[arg(long)]
    pub alpha_f: Option<f64>,
    /// Inference cost coefficient [0.5]
    #[arg(long)]
    pub beta_f: Option<f64>,
    /// Quality threshold [0.3]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Efficiency bonus rate [0.5]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Efficiency bonus cap [0.2]
    #[arg(long)]
    pub b_max: Option<f64>,
    /// Evaluator closeness coefficient [1.0]
    #[arg(long)]
    pub alpha_m: Option<f64>,
    /// Evaluator cost coefficient [0.5]
    #[arg(long)]
    pub beta_m: Option<f64>,
    /// Trust learning rate lambda [0.1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lower trust bound [0.1]
    #[arg(long)]
    pub w_min: Option<f64>,
    /// Upper trust bound [3.0]
    #[arg(long)]
    pub w_max: Option<f64>,
    /// Initial trust weight [1.0]
    #[arg(long)]
    pub w_init: Option<f64>,
    /// Attack: random_noise, boost, sabotage, strategic or none [none]
    #[arg(long)]
    pub attack: Option<String>,
    /// Malicious ratio rho [0]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Random-noise radius [3.0]
    #[arg(long = "r")]
    pub r: Option<f64>,
    /// Boost/sabotage offset [3.0]
    #[arg(long = "b")]
    pub b: Option<f64>,
    /// Strategic deviation [4.0]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Strategic activation probability [0.3]
    #[arg(long = "p")]
    pub p: Option<f64>,
    /// Master seed [0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Round log retention: full or summary_only [full]
    #[arg(long, value_parser = parse_log)]
    pub log: Option<LogRetention>,
}

fn parse_log(raw: &str) -> Result<LogRetention, String> {
    match raw {
        "full" => Ok(LogRetention::Full),
        "summary_only" => Ok(LogRetention::SummaryOnly),
        other => Err(format!("expected `full` or `summary_only`, got `{other}`")),
    }
}

impl SimArgs {
    pub fn flags(&self) -> FlatConfig {
        FlatConfig {
            rounds: self.rounds,
            k: self.k,
            rule: self.rule.clone(),
            gamma: self.gamma,
            alpha_f: self.alpha_f,
            beta_f: self.beta_f,
            tau: self.tau,
            eta: self.eta,
            b_max: self.b_max,
            alpha_m: self.alpha_m,
            beta_m: self.beta_m,
            lambda: self.lambda,
            w_min: self.w_min,
            w_max: self.w_max,
            w_init: self.w_init,
            attack: self.attack.clone(),
            rho: self.rho,
            r: self.r,
            b: self.b,
            delta: self.delta,
            p: self.p,
            seed: self.seed,
            log: self.log,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Axis to sweep: rho, k, defense or attack. Repeat for a grid; the
    /// first axis varies slowest.
    #[arg(long = "axis", required = true)]
    pub axes: Vec<String>,
    /// Comma-separated values for the axis at the same position.
    #[arg(long = "values", required = true)]
    pub values: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Evaluator and consensus correlation with the ground-truth proxy.
    Correlation(CorrelationArgs),
    /// Percent change in inference reward per attack and defense.
    Robustness(RobustnessArgs),
}

#[derive(Debug, Args)]
pub struct CorrelationArgs {
    /// Line-delimited score records with ground-truth proxies.
    #[arg(long)]
    pub records: PathBuf,
    /// Trim ratio for the trimmed-mean consensus.
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// `sweep.json` from a sweep over attack, defense and rho (including 0).
    #[arg(long)]
    pub sweep: PathBuf,
    /// Malicious ratio to compare against the rho = 0 baseline.
    #[arg(long)]
    pub rho: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec (JSON). Without it the built-in heterogeneous pool is used.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Network profile to generate for. Defaults to the built-in five-by-five pool.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Number of records; overrides the spec file.
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator seed; overrides the spec file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `records.jsonl` and `profile.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Also check model and evaluator ids against this profile.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}
