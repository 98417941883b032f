use std::path::{Path, PathBuf};

use poq_core::io::emit::{consensus_correlation_csv, robustness_csv, sweep_csv};
use poq_core::io::{
    default_profile, default_spec, emit_correlation, emit_robustness, emit_run, emit_sweep,
    generate_synthetic, load_profile, load_records, load_spec, load_sweep, save_profile,
    save_records, FlatConfig,
};
use poq_core::metrics::robustness_from_grid;
use poq_core::model::validate_records;
use poq_core::{
    consensus_alignment, run_grid, run_simulation, ConsensusRule, NetworkProfile, PoqError, Result,
    ScoreRecord, SimConfig, SweepAxis,
};

use crate::args::{
    AnalyzeCommand, Command, CorrelationArgs, DataArgs, RobustnessArgs, SimArgs, SimulateArgs,
    SweepArgs, SynthArgs, ValidateArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Analyze(AnalyzeCommand::Correlation(args)) => correlation(args),
        Command::Analyze(AnalyzeCommand::Robustness(args)) => robustness(args),
        Command::Synth(args) => synth(args),
        Command::Validate(args) => validate(args),
    }
}

fn load_data(data: &DataArgs) -> Result<(Vec<ScoreRecord>, NetworkProfile)> {
    match (&data.records, &data.profile) {
        (Some(records), Some(profile)) => {
            let profile = load_profile(profile)?;
            Ok((load_records(records)?, profile))
        }
        _ => {
            let profile = default_profile();
            let records =
                generate_synthetic(&default_spec(data.synth_n, data.synth_seed), &profile)?;
            Ok((records, profile))
        }
    }
}

fn resolve(sim: &SimArgs, allow_detached_attack: bool) -> Result<SimConfig> {
    let file = match &sim.config {
        Some(path) => FlatConfig::load(path)?,
        None => FlatConfig::default(),
    };
    file.overlay(&sim.flags()).resolve(allow_detached_attack)
}

fn report_written(out: &Path, written: &[PathBuf]) {
    println!("wrote {} files to {}", written.len(), out.display());
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = resolve(&args.sim, false)?;
    let (records, profile) = load_data(&args.data)?;
    let run = run_simulation(&records, &profile, &config)?;
    let s = &run.summary;
    println!(
        "rounds {}  inference avg {:.4} (std {:.4})  evaluator avg {:.4} (std {:.4})",
        s.rounds, s.inference.avg, s.inference.std, s.evaluator.avg, s.evaluator.std
    );
    report_written(&args.out, &emit_run(&args.out, &run)?);
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    if args.axes.len() != args.values.len() {
        return Err(PoqError::Config(format!(
            "{} --axis flags but {} --values lists",
            args.axes.len(),
            args.values.len()
        )));
    }
    let axes = args
        .axes
        .iter()
        .zip(&args.values)
        .map(|(axis, values)| {
            let axis: SweepAxis = axis.parse()?;
            Ok((axis, axis.parse_values(values)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let sweeps_attack = axes.iter().any(|(a, _)| *a == SweepAxis::AttackKind);
    let base = resolve(&args.sim, sweeps_attack)?;
    let (records, profile) = load_data(&args.data)?;

    let grid = run_grid(&records, &profile, &base, &axes)?;
    let names: Vec<SweepAxis> = axes.iter().map(|(a, _)| *a).collect();
    print!("{}", sweep_csv(&names, &grid));
    report_written(&args.out, &emit_sweep(&args.out, &names, &grid)?);
    Ok(())
}

fn correlation(args: CorrelationArgs) -> Result<()> {
    let records = load_records(&args.records)?;
    let rules = [
        ConsensusRule::Mean,
        ConsensusRule::Median,
        ConsensusRule::TrimmedMean,
    ];
    let report = consensus_alignment(&records, &rules, args.gamma)?;
    if report.is_empty() {
        return Err(PoqError::Data(
            "no record carries a ground-truth proxy".to_string(),
        ));
    }
    print!("{}", consensus_correlation_csv(&report));
    report_written(&args.out, &emit_correlation(&args.out, &report)?);
    Ok(())
}

fn robustness(args: RobustnessArgs) -> Result<()> {
    let artifact = load_sweep(&args.sweep)?;
    let table = robustness_from_grid(&artifact.runs, args.rho)?;
    print!("{}", robustness_csv(&table));
    report_written(&args.out, &emit_robustness(&args.out, &table)?);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let profile = match &args.profile {
        Some(path) => load_profile(path)?,
        None => default_profile(),
    };
    let mut spec = match &args.spec {
        Some(path) => load_spec(path)?,
        None => default_spec(2000, 0),
    };
    if let Some(n) = args.n {
        spec.n_records = n;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let records = generate_synthetic(&spec, &profile)?;
    std::fs::create_dir_all(&args.out).map_err(|e| PoqError::Io {
        path: args.out.clone(),
        source: e,
    })?;
    save_records(&args.out.join("records.jsonl"), &records)?;
    save_profile(&args.out.join("profile.json"), &profile)?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let records = load_records(&args.records)?;
    let profile = args.profile.as_deref().map(load_profile).transpose()?;
    let violations = validate_records(&records, profile.as_ref());
    for v in &violations {
        println!("{}: {v}", v.record_id());
    }
    if violations.is_empty() {
        println!("{} records ok", records.len());
        Ok(())
    } else {
        Err(PoqError::Data(format!("{} violations", violations.len())))
    }
}
