use std::fs;

use poq_core::io::emit::{
    consensus_correlation_csv, evaluator_correlation_csv, evaluators_csv, models_csv,
    robustness_csv, sweep_csv, weights_csv,
};
use poq_core::io::{
    default_profile, default_spec, emit_correlation, emit_robustness, emit_run, emit_sweep,
    generate_synthetic, load_sweep,
};
use poq_core::metrics::robustness_from_grid;
use poq_core::{
    consensus_alignment, run_grid, run_simulation, AttackKind, AxisValue, ConsensusRule,
    LogRetention, SimConfig, SweepAxis,
};

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

fn small_run(retention: LogRetention) -> poq_core::RunResult {
    let profile = default_profile();
    let records = generate_synthetic(&default_spec(100, 1), &profile).unwrap();
    let config = SimConfig {
        rounds: 50,
        log_retention: retention,
        ..SimConfig::default()
    };
    run_simulation(&records, &profile, &config).unwrap()
}

#[test]
fn run_tables_have_fixed_columns() {
    let run = small_run(LogRetention::Full);
    assert_eq!(
        header(&models_csv(&run.summary)),
        "model,avg_reward,avg_gt,cost,jobs"
    );
    assert_eq!(
        header(&evaluators_csv(&run.summary)),
        "evaluator,avg_reward,avg_deviation,cost,jobs"
    );
    let weights = weights_csv(&run);
    assert_eq!(header(&weights), "round,evaluator_id,weight");
    assert_eq!(weights.lines().count(), 1 + 50 * 5);
    assert_eq!(models_csv(&run.summary).lines().count(), 1 + 5);
}

#[test]
fn sweep_table_columns_follow_the_axes() {
    assert_eq!(
        sweep_csv(&[SweepAxis::SampleSizeK], &[]),
        "K,inf_avg,inf_std,eval_avg,eval_std\n"
    );
    assert_eq!(
        header(&sweep_csv(
            &[SweepAxis::AttackKind, SweepAxis::MaliciousRatio],
            &[]
        )),
        "attack,rho,inf_avg,inf_std,eval_avg,eval_std"
    );
}

#[test]
fn correlation_and_robustness_tables() {
    let profile = default_profile();
    let records = generate_synthetic(&default_spec(200, 2), &profile).unwrap();
    let rules = [
        ConsensusRule::Mean,
        ConsensusRule::Median,
        ConsensusRule::TrimmedMean,
    ];
    let report = consensus_alignment(&records, &rules, 0.2).unwrap();
    let stats = "pearson_all,spearman_all,pearson_qa,spearman_qa,pearson_sum,spearman_sum,pearson_other,spearman_other";
    assert_eq!(
        header(&evaluator_correlation_csv(&report)),
        format!("evaluator,{stats}")
    );
    let consensus = consensus_correlation_csv(&report);
    assert_eq!(header(&consensus), format!("consensus,{stats}"));
    // No `other` records: those cells stay empty.
    assert!(consensus.lines().nth(1).unwrap().ends_with(",,"));

    let base = SimConfig {
        rounds: 100,
        ..SimConfig::default()
    };
    let axes = vec![
        (
            SweepAxis::AttackKind,
            vec![AxisValue::Attack(Some(AttackKind::Boost))],
        ),
        (
            SweepAxis::Defense,
            ConsensusRule::ALL
                .iter()
                .map(|r| AxisValue::Defense(*r))
                .collect(),
        ),
        (
            SweepAxis::MaliciousRatio,
            vec![AxisValue::Rho(0.0), AxisValue::Rho(0.8)],
        ),
    ];
    let grid = run_grid(&records, &profile, &base, &axes).unwrap();
    let table = robustness_from_grid(&grid, 0.8).unwrap();
    let csv = robustness_csv(&table);
    assert_eq!(
        header(&csv),
        "attack,mean,median,trimmed_mean,adaptive_weighted"
    );
    assert!(csv.lines().nth(1).unwrap().starts_with("boost,"));

    let dir = tempfile::tempdir().unwrap();
    emit_correlation(dir.path(), &report).unwrap();
    emit_robustness(dir.path(), &table).unwrap();
    let axis_names: Vec<SweepAxis> = axes.iter().map(|(a, _)| *a).collect();
    emit_sweep(dir.path(), &axis_names, &grid).unwrap();
    let loaded = load_sweep(&dir.path().join("sweep.json")).unwrap();
    assert_eq!(loaded.runs, grid);
    for name in [
        "correlation.json",
        "evaluator_correlation.csv",
        "consensus_correlation.csv",
        "robustness.json",
        "robustness.csv",
        "sweep.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn emit_run_writes_round_artifacts_only_when_retained() {
    let dir = tempfile::tempdir().unwrap();
    let written = emit_run(dir.path(), &small_run(LogRetention::Full)).unwrap();
    assert_eq!(written.len(), 6);
    let rounds = fs::read_to_string(dir.path().join("rounds.jsonl")).unwrap();
    assert_eq!(rounds.lines().count(), 50);

    let dir = tempfile::tempdir().unwrap();
    let written = emit_run(dir.path(), &small_run(LogRetention::SummaryOnly)).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["summary.json", "models.csv", "evaluators.csv"]);
}
