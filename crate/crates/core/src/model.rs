//! Domain types shared across the engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::AttackSpec;
use crate::consensus::ConsensusRule;
use crate::cost::normalize_costs;
use crate::error::{PoqError, Result};

/// Upper end of the evaluator score scale.
pub const SCORE_MAX: f64 = 10.0;

pub(crate) fn in_score_range(value: f64) -> bool {
    (0.0..=SCORE_MAX).contains(&value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Qa,
    Summarization,
    Other,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Qa, Task::Summarization, Task::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Qa => "qa",
            Task::Summarization => "summarization",
            Task::Other => "other",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PoqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qa" => Ok(Task::Qa),
            "summarization" => Ok(Task::Summarization),
            "other" => Ok(Task::Other),
            _ => Err(PoqError::config(format!("unknown task `{s}`"))),
        }
    }
}

/// One generation event: an inference model's output scored by evaluators.
///
/// Scores are normalized to `[0, 10]`. The ground-truth proxy is optional
/// because the live protocol never sees it; it exists for offline analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub record_id: String,
    pub task: Task,
    pub model_key: String,
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_proxy: Option<f64>,
}

/// Latencies as stored on disk. Costs are never persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyProfile {
    pub inference_models: BTreeMap<String, f64>,
    pub evaluators: BTreeMap<String, f64>,
}

/// Inference and evaluator pools with their latencies and derived costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatencyProfile", into = "LatencyProfile")]
pub struct NetworkProfile {
    inference_models: BTreeMap<String, f64>,
    evaluators: BTreeMap<String, f64>,
    inference_costs: BTreeMap<String, f64>,
    evaluator_costs: BTreeMap<String, f64>,
}

impl NetworkProfile {
    pub fn new(
        inference_models: BTreeMap<String, f64>,
        evaluators: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let inference_costs = normalize_costs(&inference_models)?;
        let evaluator_costs = normalize_costs(&evaluators)?;
        Ok(Self {
            inference_models,
            evaluators,
            inference_costs,
            evaluator_costs,
        })
    }

    pub fn inference_models(&self) -> &BTreeMap<String, f64> {
        &self.inference_models
    }

    pub fn evaluators(&self) -> &BTreeMap<String, f64> {
        &self.evaluators
    }

    pub fn inference_costs(&self) -> &BTreeMap<String, f64> {
        &self.inference_costs
    }

    pub fn evaluator_costs(&self) -> &BTreeMap<String, f64> {
        &self.evaluator_costs
    }

    pub fn inference_cost(&self, model_key: &str) -> Option<f64> {
        self.inference_costs.get(model_key).copied()
    }

    pub fn evaluator_cost(&self, evaluator_id: &str) -> Option<f64> {
        self.evaluator_costs.get(evaluator_id).copied()
    }

    /// Evaluator ids in their canonical (sorted) pool order.
    pub fn evaluator_ids(&self) -> impl Iterator<Item = &str> {
        self.evaluators.keys().map(String::as_str)
    }

    pub fn evaluator_count(&self) -> usize {
        self.evaluators.len()
    }
}

impl TryFrom<LatencyProfile> for NetworkProfile {
    type Error = PoqError;

    fn try_from(raw: LatencyProfile) -> Result<Self> {
        NetworkProfile::new(raw.inference_models, raw.evaluators)
    }
}

impl From<NetworkProfile> for LatencyProfile {
    fn from(profile: NetworkProfile) -> Self {
        LatencyProfile {
            inference_models: profile.inference_models,
            evaluators: profile.evaluators,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    pub alpha_f: f64,
    pub beta_f: f64,
    pub tau: f64,
    pub eta: f64,
    pub b_max: f64,
    pub alpha_m: f64,
    pub beta_m: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            alpha_f: 1.0,
            beta_f: 0.5,
            tau: 0.3,
            eta: 0.5,
            b_max: 0.2,
            alpha_m: 1.0,
            beta_m: 0.5,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("alpha_f", self.alpha_f),
            ("beta_f", self.beta_f),
            ("eta", self.eta),
            ("b_max", self.b_max),
            ("alpha_m", self.alpha_m),
            ("beta_m", self.beta_m),
        ];
        for (name, value) in weights {
            if !(value.is_finite() && value >= 0.0) {
                return Err(PoqError::config(format!(
                    "{name} must be a finite non-negative number, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(PoqError::config(format!(
                "tau must lie in [0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustParams {
    pub lambda: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub w_init: f64,
}

impl Default for TrustParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            w_min: 0.1,
            w_max: 3.0,
            w_init: 1.0,
        }
    }
}

impl TrustParams {
    /// Checks the clamp bounds and initial weight.
    ///
    /// `lambda = 0` is accepted: it pins every weight, which turns the
    /// adaptive rule into the plain mean.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(PoqError::config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.w_min > 0.0 && self.w_min <= 1.0 && self.w_max >= 1.0 && self.w_max.is_finite()) {
            return Err(PoqError::config(format!(
                "trust bounds must satisfy 0 < w_min <= 1 <= w_max, got [{}, {}]",
                self.w_min, self.w_max
            )));
        }
        if !(self.w_min..=self.w_max).contains(&self.w_init) {
            return Err(PoqError::config(format!(
                "w_init {} outside [{}, {}]",
                self.w_init, self.w_min, self.w_max
            )));
        }
        Ok(())
    }
}

/// How much of each run the engine keeps in memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogRetention {
    #[default]
    Full,
    SummaryOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub rounds: usize,
    pub sample_size: usize,
    pub consensus_rule: ConsensusRule,
    pub trim_ratio: f64,
    pub reward_params: RewardParams,
    pub trust_params: TrustParams,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    pub rng_seed: u64,
    #[serde(default)]
    pub log_retention: LogRetention,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rounds: 5000,
            sample_size: 3,
            consensus_rule: ConsensusRule::Mean,
            trim_ratio: 0.2,
            reward_params: RewardParams::default(),
            trust_params: TrustParams::default(),
            attack: None,
            rng_seed: 0,
            log_retention: LogRetention::Full,
        }
    }
}

impl SimConfig {
    /// Validates the configuration on its own, independent of any pool.
    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(PoqError::config("sample size K must be at least 1"));
        }
        if !(self.trim_ratio > 0.0 && self.trim_ratio < 0.5) {
            return Err(PoqError::config(format!(
                "trim ratio must lie in (0, 0.5), got {}",
                self.trim_ratio
            )));
        }
        self.reward_params.validate()?;
        self.trust_params.validate()?;
        if let Some(attack) = &self.attack {
            attack.validate()?;
        }
        Ok(())
    }

    /// Validates the configuration against a concrete pool and dataset.
    ///
    /// Records with fewer scored evaluators than `K` are rejected here rather
    /// than skipped per round.
    pub fn validate_for(&self, records: &[ScoreRecord], profile: &NetworkProfile) -> Result<()> {
        self.validate()?;
        if self.sample_size > profile.evaluator_count() {
            return Err(PoqError::config(format!(
                "sample size K={} exceeds the evaluator pool size {}",
                self.sample_size,
                profile.evaluator_count()
            )));
        }
        if let Some(short) = records.iter().find(|r| r.scores.len() < self.sample_size) {
            return Err(PoqError::config(format!(
                "record `{}` has {} evaluator scores, fewer than K={}",
                short.record_id,
                short.scores.len(),
                self.sample_size
            )));
        }
        Ok(())
    }
}

/// Per-round log entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round_index: usize,
    pub record_id: String,
    pub model_key: String,
    pub evaluator_subset: Vec<String>,
    pub submitted_scores: BTreeMap<String, f64>,
    pub consensus: f64,
    pub quality: f64,
    pub inference_reward: f64,
    pub evaluator_rewards: BTreeMap<String, f64>,
    pub deviations: BTreeMap<String, f64>,
}

/// A single problem found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyScores {
        record_id: String,
    },
    ScoreOutOfRange {
        record_id: String,
        evaluator_id: String,
        value: f64,
    },
    GtOutOfRange {
        record_id: String,
        value: f64,
    },
    UnknownModel {
        record_id: String,
        model_key: String,
    },
    UnknownEvaluator {
        record_id: String,
        evaluator_id: String,
    },
    DuplicateRecordId {
        record_id: String,
    },
}

impl Violation {
    pub fn record_id(&self) -> &str {
        match self {
            Violation::EmptyScores { record_id }
            | Violation::ScoreOutOfRange { record_id, .. }
            | Violation::GtOutOfRange { record_id, .. }
            | Violation::UnknownModel { record_id, .. }
            | Violation::UnknownEvaluator { record_id, .. }
            | Violation::DuplicateRecordId { record_id } => record_id,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyScores { record_id } => {
                write!(f, "record `{record_id}`: no evaluator scores")
            }
            Violation::ScoreOutOfRange {
                record_id,
                evaluator_id,
                value,
            } => write!(
                f,
                "record `{record_id}`: score {value} from evaluator `{evaluator_id}` outside [0, 10]"
            ),
            Violation::GtOutOfRange { record_id, value } => {
                write!(f, "record `{record_id}`: gt_proxy {value} outside [0, 10]")
            }
            Violation::UnknownModel {
                record_id,
                model_key,
            } => write!(f, "record `{record_id}`: unknown model `{model_key}`"),
            Violation::UnknownEvaluator {
                record_id,
                evaluator_id,
            } => write!(f, "record `{record_id}`: unknown evaluator `{evaluator_id}`"),
            Violation::DuplicateRecordId { record_id } => {
                write!(f, "record id `{record_id}` appears more than once")
            }
        }
    }
}

/// Checks records against the score-range invariants and the profile.
///
/// Pass `None` as the profile to check only the record-local invariants.
pub fn validate_records(
    records: &[ScoreRecord],
    profile: Option<&NetworkProfile>,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for record in records {
        let id = &record.record_id;
        if !seen.insert(id.as_str()) {
            violations.push(Violation::DuplicateRecordId {
                record_id: id.clone(),
            });
        }
        if record.scores.is_empty() {
            violations.push(Violation::EmptyScores {
                record_id: id.clone(),
            });
        }
        if let Some(profile) = profile {
            if !profile.inference_models().contains_key(&record.model_key) {
                violations.push(Violation::UnknownModel {
                    record_id: id.clone(),
                    model_key: record.model_key.clone(),
                });
            }
        }
        for (evaluator_id, &value) in &record.scores {
            if !in_score_range(value) {
                violations.push(Violation::ScoreOutOfRange {
                    record_id: id.clone(),
                    evaluator_id: evaluator_id.clone(),
                    value,
                });
            }
            if let Some(profile) = profile {
                if !profile.evaluators().contains_key(evaluator_id) {
                    violations.push(Violation::UnknownEvaluator {
                        record_id: id.clone(),
                        evaluator_id: evaluator_id.clone(),
                    });
                }
            }
        }
        if let Some(gt) = record.gt_proxy {
            if !in_score_range(gt) {
                violations.push(Violation::GtOutOfRange {
                    record_id: id.clone(),
                    value: gt,
                });
            }
        }
    }
    violations
}

/// Full dataset check against a profile. An empty report means valid.
pub fn validate_dataset(records: &[ScoreRecord], profile: &NetworkProfile) -> Vec<Violation> {
    validate_records(records, Some(profile))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> NetworkProfile {
        NetworkProfile::new(
            [("m1".to_string(), 1.0), ("m2".to_string(), 2.0)].into(),
            [("e1".to_string(), 0.1), ("e2".to_string(), 0.3)].into(),
        )
        .unwrap()
    }

    fn record(id: &str, model: &str, scores: &[(&str, f64)]) -> ScoreRecord {
        ScoreRecord {
            record_id: id.into(),
            task: Task::Qa,
            model_key: model.into(),
            scores: scores.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            gt_proxy: None,
        }
    }

    #[test]
    fn boundary_score_is_valid() {
        let recs = [record("r1", "m1", &[("e1", 10.0), ("e2", 0.0)])];
        assert!(validate_dataset(&recs, &profile()).is_empty());
    }

    #[test]
    fn out_of_range_score_names_record_and_evaluator() {
        let recs = [record("r1", "m1", &[("e1", 11.2)])];
        let report = validate_dataset(&recs, &profile());
        assert_eq!(
            report,
            vec![Violation::ScoreOutOfRange {
                record_id: "r1".into(),
                evaluator_id: "e1".into(),
                value: 11.2
            }]
        );
    }

    #[test]
    fn unknown_model() {
        let recs = [record("r1", "m9", &[("e1", 5.0)])];
        let report = validate_dataset(&recs, &profile());
        assert_eq!(report.len(), 1);
        assert!(
            matches!(&report[0], Violation::UnknownModel { model_key, .. } if model_key == "m9")
        );
    }

    #[test]
    fn other_violations() {
        let mut bad_gt = record("r2", "m1", &[("e1", 5.0), ("zz", 1.0)]);
        bad_gt.gt_proxy = Some(-0.5);
        let recs = [
            record("r1", "m1", &[]),
            bad_gt,
            record("r1", "m2", &[("e2", f64::NAN)]),
        ];
        let report = validate_dataset(&recs, &profile());
        assert!(report.contains(&Violation::EmptyScores {
            record_id: "r1".into()
        }));
        assert!(report.contains(&Violation::DuplicateRecordId {
            record_id: "r1".into()
        }));
        assert!(report.contains(&Violation::GtOutOfRange {
            record_id: "r2".into(),
            value: -0.5
        }));
        assert!(report.iter().any(|v| matches!(v, Violation::UnknownEvaluator { evaluator_id, .. } if evaluator_id == "zz")));
        assert!(report.iter().any(
            |v| matches!(v, Violation::ScoreOutOfRange { record_id, .. } if record_id == "r1")
        ));
    }

    #[test]
    fn profile_serializes_latencies_only() {
        let p = profile();
        let json = serde_json::to_string(&p).unwrap();
        assert!(!json.contains("cost"));
        let back: NetworkProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.inference_cost("m2"), Some(1.0));
    }

    #[test]
    fn profile_rejects_non_positive_latency() {
        let json = r#"{"inference_models":{"m":0.0},"evaluators":{"e":1.0}}"#;
        assert!(serde_json::from_str::<NetworkProfile>(json).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.trim_ratio = 0.5;
        assert!(cfg.validate().is_err());
        cfg.trim_ratio = 0.2;
        cfg.sample_size = 3;
        let recs = [record("r1", "m1", &[("e1", 1.0), ("e2", 2.0)])];
        assert!(matches!(
            cfg.validate_for(&recs, &profile()),
            Err(PoqError::Config(_))
        ));
        cfg.sample_size = 2;
        assert!(cfg.validate_for(&recs, &profile()).is_ok());
    }
}
