//! Offline analysis: ground-truth proxy, correlations, consensus alignment
//! and robustness deltas.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::adversary::AttackKind;
use crate::consensus::{ConsensusInput, ConsensusRule};
use crate::engine::RunSummary;
use crate::error::{PoqError, Result};
use crate::model::{ScoreRecord, Task, SCORE_MAX};
use crate::sweep::{AxisValue, GridRun, SweepAxis};

/// A statistic that may be undefined (zero variance, too few points, zero
/// baseline). Serialized as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Value(f64),
    Undefined,
}

impl Coefficient {
    pub fn value(self) -> Option<f64> {
        match self {
            Coefficient::Value(v) => Some(v),
            Coefficient::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        self == Coefficient::Undefined
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Value(v) => write!(f, "{v}"),
            Coefficient::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coefficient::Value(v) => serializer.serialize_f64(*v),
            Coefficient::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Marker(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(Coefficient::Value(v)),
            Repr::Marker(m) if m == "undefined" => Ok(Coefficient::Undefined),
            Repr::Marker(m) => Err(serde::de::Error::custom(format!(
                "expected a number or \"undefined\", got \"{m}\""
            ))),
        }
    }
}

fn articles() -> &'static Regex {
    static ARTICLES: OnceLock<Regex> = OnceLock::new();
    ARTICLES.get_or_init(|| Regex::new(r"\b(a|an|the)\b").expect("static pattern"))
}

/// SQuAD-style answer normalization: lowercase, drop ASCII punctuation,
/// drop the articles a/an/the, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    let no_articles = articles().replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Token-level F1 with multiset overlap after [`normalize_answer`].
///
/// Two empty token lists score 1; exactly one empty list scores 0.
pub fn token_f1(prediction: &str, reference: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gold = normalize_answer(reference);
    let pred_tokens: Vec<&str> = pred.split_whitespace().collect();
    let gold_tokens: Vec<&str> = gold.split_whitespace().collect();
    if pred_tokens.is_empty() || gold_tokens.is_empty() {
        return if pred_tokens.is_empty() && gold_tokens.is_empty() {
            1.0
        } else {
            0.0
        };
    }

    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold_tokens {
        *gold_counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred_tokens {
        if let Some(c) = gold_counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred_tokens.len() as f64;
    let recall = common as f64 / gold_tokens.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Ground-truth proxy on the score scale: `10 * token_f1`.
pub fn gt_score(prediction: &str, reference: &str) -> f64 {
    SCORE_MAX * token_f1(prediction, reference)
}

/// Sample Pearson correlation.
///
/// Fewer than two points or a constant series yields `Undefined`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Coefficient> {
    if xs.len() != ys.len() {
        return Err(PoqError::config(format!(
            "correlation inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Ok(Coefficient::Undefined);
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Coefficient::Undefined);
    }
    Ok(Coefficient::Value(
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
    ))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Coefficient> {
    if xs.len() != ys.len() {
        return pearson(xs, ys);
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    pub pearson: Coefficient,
    pub spearman: Coefficient,
}

impl Correlation {
    fn of(xs: &[f64], ys: &[f64]) -> Self {
        Self {
            n: xs.len(),
            pearson: pearson(xs, ys).expect("paired series"),
            spearman: spearman(xs, ys).expect("paired series"),
        }
    }
}

/// Correlation of one signal against the ground-truth proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub name: String,
    pub all: Correlation,
    pub by_task: BTreeMap<Task, Correlation>,
}

impl CorrelationRow {
    fn build(name: String, points: &[(Task, f64, f64)]) -> Self {
        let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
        let mut by_task = BTreeMap::new();
        for task in Task::ALL {
            let (tx, ty): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.0 == task)
                .map(|p| (p.1, p.2))
                .unzip();
            if !tx.is_empty() {
                by_task.insert(task, Correlation::of(&tx, &ty));
            }
        }
        Self {
            name,
            all: Correlation::of(&xs, &ys),
            by_task,
        }
    }

    pub fn task(&self, task: Task) -> Option<&Correlation> {
        self.by_task.get(&task)
    }
}

/// Evaluator and consensus correlations against the ground-truth proxy.
/// Built only from records that carry a proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n_records: usize,
    pub evaluators: Vec<CorrelationRow>,
    pub consensus: Vec<CorrelationRow>,
}

impl CorrelationReport {
    /// True when no record carried a ground-truth proxy.
    pub fn is_empty(&self) -> bool {
        self.n_records == 0
    }

    pub fn consensus_row(&self, rule: ConsensusRule) -> Option<&CorrelationRow> {
        self.consensus.iter().find(|r| r.name == rule.as_str())
    }

    pub fn evaluator_row(&self, evaluator_id: &str) -> Option<&CorrelationRow> {
        self.evaluators.iter().find(|r| r.name == evaluator_id)
    }
}

/// Per-evaluator correlations with the proxy (one row per evaluator seen).
pub fn evaluator_correlations(records: &[ScoreRecord]) -> Vec<CorrelationRow> {
    let mut points: BTreeMap<&str, Vec<(Task, f64, f64)>> = BTreeMap::new();
    for record in records {
        let Some(gt) = record.gt_proxy else { continue };
        for (evaluator_id, score) in &record.scores {
            points
                .entry(evaluator_id)
                .or_default()
                .push((record.task, *score, gt));
        }
    }
    points
        .into_iter()
        .map(|(id, pts)| CorrelationRow::build(id.to_string(), &pts))
        .collect()
}

/// Per-record consensus over every available evaluator score, correlated
/// with the proxy, for each unweighted rule in `rules`.
pub fn consensus_alignment(
    records: &[ScoreRecord],
    rules: &[ConsensusRule],
    gamma: f64,
) -> Result<CorrelationReport> {
    if let Some(rule) = rules.iter().find(|r| r.uses_weights()) {
        return Err(PoqError::config(format!(
            "consensus alignment supports unweighted rules only, got {rule}"
        )));
    }
    let with_gt: Vec<&ScoreRecord> = records.iter().filter(|r| r.gt_proxy.is_some()).collect();

    let mut consensus = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut points = Vec::with_capacity(with_gt.len());
        for record in &with_gt {
            let input =
                ConsensusInput::new(record.scores.iter().map(|(k, v)| (k.clone(), *v)).collect());
            let c = rule.apply(&input, gamma)?;
            points.push((record.task, c, record.gt_proxy.unwrap_or_default()));
        }
        consensus.push(CorrelationRow::build(rule.as_str().to_string(), &points));
    }

    Ok(CorrelationReport {
        n_records: with_gt.len(),
        evaluators: evaluator_correlations(records),
        consensus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RobustnessKey {
    pub attack: AttackKind,
    pub defense: ConsensusRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub attack: AttackKind,
    pub defense: ConsensusRule,
    pub baseline_reward: f64,
    pub attacked_reward: f64,
    pub change_pct: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub rho: Option<f64>,
    pub cells: Vec<RobustnessCell>,
}

impl RobustnessTable {
    pub fn get(&self, attack: AttackKind, defense: ConsensusRule) -> Option<&RobustnessCell> {
        self.cells
            .iter()
            .find(|c| c.attack == attack && c.defense == defense)
    }

    pub fn attacks(&self) -> Vec<AttackKind> {
        let mut out: Vec<AttackKind> = Vec::new();
        for cell in &self.cells {
            if !out.contains(&cell.attack) {
                out.push(cell.attack);
            }
        }
        out
    }
}

/// Percent change `100 * (attacked - baseline) / |baseline|`.
pub fn percent_change(baseline: f64, attacked: f64) -> Coefficient {
    if baseline == 0.0 {
        Coefficient::Undefined
    } else {
        Coefficient::Value(100.0 * (attacked - baseline) / baseline.abs())
    }
}

/// Relative change in average inference reward per (attack, defense) cell.
pub fn robustness_delta(
    baseline: &BTreeMap<RobustnessKey, RunSummary>,
    attacked: &BTreeMap<RobustnessKey, RunSummary>,
) -> Result<RobustnessTable> {
    if baseline.len() != attacked.len() || baseline.keys().any(|k| !attacked.contains_key(k)) {
        return Err(PoqError::config(
            "baseline and attacked runs must cover the same (attack, defense) cells",
        ));
    }
    let cells = baseline
        .iter()
        .map(|(key, base)| {
            let hit = &attacked[key];
            RobustnessCell {
                attack: key.attack,
                defense: key.defense,
                baseline_reward: base.inference.avg,
                attacked_reward: hit.inference.avg,
                change_pct: percent_change(base.inference.avg, hit.inference.avg),
            }
        })
        .collect();
    Ok(RobustnessTable { rho: None, cells })
}

/// Extracts a robustness table from a grid over attack x defense x rho,
/// comparing `rho = 0` against `rho`.
pub fn robustness_from_grid(grid: &[GridRun], rho: f64) -> Result<RobustnessTable> {
    let mut baseline = BTreeMap::new();
    let mut attacked = BTreeMap::new();
    for run in grid {
        let attack = match run.value(SweepAxis::AttackKind) {
            Some(AxisValue::Attack(Some(kind))) => kind,
            Some(AxisValue::Attack(None)) => continue,
            _ => {
                return Err(PoqError::config(
                    "robustness table needs a sweep over the attack axis",
                ))
            }
        };
        let defense = match run.value(SweepAxis::Defense) {
            Some(AxisValue::Defense(rule)) => rule,
            _ => run.summary.config.consensus_rule,
        };
        let run_rho = match run.value(SweepAxis::MaliciousRatio) {
            Some(AxisValue::Rho(r)) => r,
            _ => {
                return Err(PoqError::config(
                    "robustness table needs a sweep over the rho axis",
                ))
            }
        };
        let key = RobustnessKey { attack, defense };
        if run_rho == 0.0 {
            baseline.insert(key, run.summary.clone());
        } else if run_rho == rho {
            attacked.insert(key, run.summary.clone());
        }
    }
    if attacked.is_empty() {
        return Err(PoqError::config(format!(
            "no runs at rho={rho} in the sweep"
        )));
    }
    let mut table = robustness_delta(&baseline, &attacked)?;
    table.rho = Some(rho);
    Ok(table)
}
