//! Result artifacts: full-fidelity JSON plus fixed-column CSV tables.
//!
//! CSV column orders (pinned by golden tests):
//!
//! | file                        | columns |
//! |-----------------------------|---------|
//! | `models.csv`                | model, avg_reward, avg_gt, cost, jobs |
//! | `evaluators.csv`            | evaluator, avg_reward, avg_deviation, cost, jobs |
//! | `weights.csv`               | round, evaluator_id, weight |
//! | `sweep.csv`                 | one column per axis, inf_avg, inf_std, eval_avg, eval_std |
//! | `evaluator_correlation.csv` | evaluator, pearson_all, spearman_all, then pearson/spearman per task (qa, sum, other) |
//! | `consensus_correlation.csv` | consensus, same statistics |
//! | `robustness.csv`            | attack, mean, median, trimmed_mean, adaptive_weighted |
//!
//! Undefined statistics are written as `undefined`; absent values (no
//! ground truth, no records for a task) as an empty cell.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::consensus::ConsensusRule;
use crate::engine::{RunResult, RunSummary};
use crate::error::{PoqError, Result};
use crate::metrics::{CorrelationReport, CorrelationRow, RobustnessTable};
use crate::model::Task;
use crate::sweep::{GridRun, SweepAxis};

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn models_csv(summary: &RunSummary) -> String {
    csv_string(
        &["model", "avg_reward", "avg_gt", "cost", "jobs"],
        summary.models.iter().map(|m| {
            vec![
                m.model.clone(),
                m.avg_reward.to_string(),
                opt(m.avg_gt),
                m.cost.to_string(),
                m.jobs.to_string(),
            ]
        }),
    )
}

pub fn evaluators_csv(summary: &RunSummary) -> String {
    csv_string(
        &["evaluator", "avg_reward", "avg_deviation", "cost", "jobs"],
        summary.evaluators.iter().map(|e| {
            vec![
                e.evaluator.clone(),
                e.avg_reward.to_string(),
                e.avg_deviation.to_string(),
                e.cost.to_string(),
                e.jobs.to_string(),
            ]
        }),
    )
}

pub fn weights_csv(run: &RunResult) -> String {
    csv_string(
        &["round", "evaluator_id", "weight"],
        run.weight_trajectory
            .iter()
            .enumerate()
            .flat_map(|(round, weights)| {
                run.evaluator_ids
                    .iter()
                    .zip(weights)
                    .map(move |(id, w)| vec![round.to_string(), id.clone(), w.to_string()])
            }),
    )
}

pub fn sweep_csv(axes: &[SweepAxis], grid: &[GridRun]) -> String {
    let mut header: Vec<&str> = axes.iter().map(|a| a.as_str()).collect();
    header.extend(["inf_avg", "inf_std", "eval_avg", "eval_std"]);
    csv_string(
        &header,
        grid.iter().map(|run| {
            let mut row: Vec<String> = axes
                .iter()
                .map(|axis| run.value(*axis).map(|v| v.to_string()).unwrap_or_default())
                .collect();
            let s = &run.summary;
            row.extend([
                s.inference.avg.to_string(),
                s.inference.std.to_string(),
                s.evaluator.avg.to_string(),
                s.evaluator.std.to_string(),
            ]);
            row
        }),
    )
}

const CORRELATION_TASKS: [(Task, &str); 3] = [
    (Task::Qa, "qa"),
    (Task::Summarization, "sum"),
    (Task::Other, "other"),
];

fn correlation_csv(first: &str, rows: &[CorrelationRow]) -> String {
    let mut header = vec![
        first.to_string(),
        "pearson_all".to_string(),
        "spearman_all".to_string(),
    ];
    for (_, suffix) in CORRELATION_TASKS {
        header.push(format!("pearson_{suffix}"));
        header.push(format!("spearman_{suffix}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(
        &header,
        rows.iter().map(|row| {
            let mut cells = vec![
                row.name.clone(),
                row.all.pearson.to_string(),
                row.all.spearman.to_string(),
            ];
            for (task, _) in CORRELATION_TASKS {
                match row.task(task) {
                    Some(c) => cells.extend([c.pearson.to_string(), c.spearman.to_string()]),
                    None => cells.extend([String::new(), String::new()]),
                }
            }
            cells
        }),
    )
}

pub fn evaluator_correlation_csv(report: &CorrelationReport) -> String {
    correlation_csv("evaluator", &report.evaluators)
}

pub fn consensus_correlation_csv(report: &CorrelationReport) -> String {
    correlation_csv("consensus", &report.consensus)
}

pub fn robustness_csv(table: &RobustnessTable) -> String {
    let mut header = vec!["attack"];
    header.extend(ConsensusRule::ALL.iter().map(|r| r.as_str()));
    csv_string(
        &header,
        table.attacks().into_iter().map(|attack| {
            let mut row = vec![attack.to_string()];
            row.extend(ConsensusRule::ALL.iter().map(|rule| {
                table
                    .get(attack, *rule)
                    .map(|c| c.change_pct.to_string())
                    .unwrap_or_default()
            }));
            row
        }),
    )
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact is serializable") + "\n"
}

/// Writes a set of named artifacts under `out_dir`, creating it if needed.
/// Returns the written paths in order.
pub fn write_artifacts(out_dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| PoqError::io(out_dir, e))?;
    files
        .iter()
        .map(|(name, content)| {
            let path = out_dir.join(name);
            fs::write(&path, content).map_err(|e| PoqError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// `summary.json`, `models.csv`, `evaluators.csv`, and, when the round log
/// was retained, `weights.csv`, `deviations.json` and `rounds.jsonl`.
pub fn emit_run(out_dir: &Path, run: &RunResult) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        ("summary.json", to_json(&run.summary)),
        ("models.csv", models_csv(&run.summary)),
        ("evaluators.csv", evaluators_csv(&run.summary)),
    ];
    if !run.rounds.is_empty() {
        files.push(("weights.csv", weights_csv(run)));
        files.push(("deviations.json", to_json(&run.deviation_history)));
        let mut lines = String::new();
        for round in &run.rounds {
            lines.push_str(&serde_json::to_string(round).expect("round is serializable"));
            lines.push('\n');
        }
        files.push(("rounds.jsonl", lines));
    }
    write_artifacts(out_dir, &files)
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepArtifact {
    pub axes: Vec<SweepAxis>,
    pub runs: Vec<GridRun>,
}

/// `sweep.json` and `sweep.csv`.
pub fn emit_sweep(out_dir: &Path, axes: &[SweepAxis], grid: &[GridRun]) -> Result<Vec<PathBuf>> {
    let artifact = SweepArtifact {
        axes: axes.to_vec(),
        runs: grid.to_vec(),
    };
    write_artifacts(
        out_dir,
        &[
            ("sweep.json", to_json(&artifact)),
            ("sweep.csv", sweep_csv(axes, grid)),
        ],
    )
}

pub fn load_sweep(path: &Path) -> Result<SweepArtifact> {
    let text = fs::read_to_string(path).map_err(|e| PoqError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PoqError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// `correlation.json`, `evaluator_correlation.csv`, `consensus_correlation.csv`.
pub fn emit_correlation(out_dir: &Path, report: &CorrelationReport) -> Result<Vec<PathBuf>> {
    write_artifacts(
        out_dir,
        &[
            ("correlation.json", to_json(report)),
            (
                "evaluator_correlation.csv",
                evaluator_correlation_csv(report),
            ),
            (
                "consensus_correlation.csv",
                consensus_correlation_csv(report),
            ),
        ],
    )
}

/// `robustness.json` and `robustness.csv`.
pub fn emit_robustness(out_dir: &Path, table: &RobustnessTable) -> Result<Vec<PathBuf>> {
    write_artifacts(
        out_dir,
        &[
            ("robustness.json", to_json(table)),
            ("robustness.csv", robustness_csv(table)),
        ],
    )
}
