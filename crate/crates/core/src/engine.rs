//! Round protocol and Monte Carlo driver.
//!
//! One round samples a record, samples `K` evaluators that scored it, lets
//! malicious evaluators rewrite their scores, forms consensus, pays the
//! inference node and the evaluators, and finally updates trust weights. The
//! consensus of round `t` therefore sees weights as of round `t - 1`.
//!
//! Randomness comes from independent ChaCha streams derived from the master
//! seed, one per purpose. Turning the attack on or off never shifts record or
//! subset draws.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{apply_attack, malicious_count, select_malicious};
use crate::consensus::ConsensusInput;
use crate::error::{PoqError, Result};
use crate::model::{
    validate_dataset, LogRetention, NetworkProfile, RoundOutcome, ScoreRecord, SimConfig, SCORE_MAX,
};
use crate::rewards::{closeness, evaluator_reward, inference_reward};
use crate::trust::{deviation, TrustState};

const STREAM_RECORDS: u64 = 1;
const STREAM_SUBSETS: u64 = 2;
const STREAM_ATTACKS: u64 = 3;
const STREAM_MALICIOUS: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
struct RngStreams {
    records: ChaCha8Rng,
    subsets: ChaCha8Rng,
    attacks: ChaCha8Rng,
}

impl RngStreams {
    fn new(seed: u64) -> Self {
        Self {
            records: stream(seed, STREAM_RECORDS),
            subsets: stream(seed, STREAM_SUBSETS),
            attacks: stream(seed, STREAM_ATTACKS),
        }
    }
}

/// Running sum, sum of squares and count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: usize,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    /// Zero for an empty accumulator.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Population standard deviation (divides by `n`).
    pub fn std(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        (self.sum_sq / n - mean * mean).max(0.0).sqrt()
    }

    pub fn stats(&self) -> RewardStats {
        RewardStats {
            avg: self.mean(),
            std: self.std(),
            count: self.count,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelAccumulator {
    pub rewards: Accumulator,
    pub gt_sum: f64,
    pub gt_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorAccumulator {
    pub rewards: Accumulator,
    pub deviation_sum: f64,
}

/// Mutable state of one simulation run.
#[derive(Debug, Clone)]
pub struct EngineState {
    pub trust: TrustState,
    malicious: BTreeSet<String>,
    pub model_stats: BTreeMap<String, ModelAccumulator>,
    pub evaluator_stats: BTreeMap<String, EvaluatorAccumulator>,
    pub inference_total: Accumulator,
    pub evaluator_total: Accumulator,
    pub round_log: Vec<RoundOutcome>,
    pub weight_trajectory: Vec<Vec<f64>>,
    rounds_run: usize,
    streams: RngStreams,
}

impl EngineState {
    /// Fresh state seeded from `config.rng_seed`. The malicious set is drawn
    /// here, once, and stays fixed for the run.
    pub fn new(profile: &NetworkProfile, config: &SimConfig) -> Self {
        let pool: Vec<&str> = profile.evaluator_ids().collect();
        let malicious = match &config.attack {
            Some(attack) => select_malicious(
                &pool,
                attack.rho,
                &mut stream(config.rng_seed, STREAM_MALICIOUS),
            ),
            None => BTreeSet::new(),
        };
        Self {
            trust: TrustState::new(pool.iter().copied(), &config.trust_params),
            malicious,
            model_stats: profile
                .inference_models()
                .keys()
                .map(|k| (k.clone(), ModelAccumulator::default()))
                .collect(),
            evaluator_stats: pool
                .iter()
                .map(|e| (e.to_string(), EvaluatorAccumulator::default()))
                .collect(),
            inference_total: Accumulator::default(),
            evaluator_total: Accumulator::default(),
            round_log: Vec::new(),
            weight_trajectory: Vec::new(),
            rounds_run: 0,
            streams: RngStreams::new(config.rng_seed),
        }
    }

    pub fn malicious(&self) -> &BTreeSet<String> {
        &self.malicious
    }

    pub fn rounds_run(&self) -> usize {
        self.rounds_run
    }
}

/// Executes one protocol round, mutating `state`.
pub fn run_round(
    state: &mut EngineState,
    records: &[ScoreRecord],
    profile: &NetworkProfile,
    config: &SimConfig,
) -> Result<RoundOutcome> {
    if records.is_empty() {
        return Err(PoqError::config("cannot run a round on an empty dataset"));
    }
    let k = config.sample_size;

    // 1. record
    let record = &records[state.streams.records.random_range(0..records.len())];

    // 2. inference cost
    let inference_cost = profile.inference_cost(&record.model_key).ok_or_else(|| {
        PoqError::data(format!(
            "record `{}` references unknown model `{}`",
            record.record_id, record.model_key
        ))
    })?;

    // 3. evaluator subset among those that scored this record
    let available: Vec<&String> = record.scores.keys().collect();
    if available.len() < k {
        return Err(PoqError::protocol(format!(
            "record `{}` has {} scored evaluators, fewer than K={k}",
            record.record_id,
            available.len()
        )));
    }
    let mut picks = index::sample(&mut state.streams.subsets, available.len(), k).into_vec();
    picks.sort_unstable();
    let subset: Vec<String> = picks.into_iter().map(|i| available[i].clone()).collect();

    // 4. submitted scores
    let mut submitted = Vec::with_capacity(k);
    for evaluator_id in &subset {
        let honest = record.scores[evaluator_id];
        let score = match &config.attack {
            Some(attack) if state.malicious.contains(evaluator_id) => {
                apply_attack(honest, attack, &mut state.streams.attacks)
            }
            _ => honest,
        };
        submitted.push((evaluator_id.clone(), score));
    }

    // 5. consensus
    let mut input = ConsensusInput::new(submitted);
    if config.consensus_rule.uses_weights() {
        input = input.with_weights(state.trust.normalized_weights());
    }
    let consensus = config
        .consensus_rule
        .apply(&input, config.trim_ratio)?
        .clamp(0.0, SCORE_MAX);
    let quality = consensus / SCORE_MAX;

    // 6. inference reward
    let reward_f = inference_reward(quality, inference_cost, &config.reward_params);
    let model = state
        .model_stats
        .get_mut(&record.model_key)
        .expect("model stats cover the profile");
    model.rewards.push(reward_f);
    if let Some(gt) = record.gt_proxy {
        model.gt_sum += gt;
        model.gt_count += 1;
    }
    state.inference_total.push(reward_f);

    // 7. evaluator rewards
    let mut evaluator_rewards = BTreeMap::new();
    let mut deviations = BTreeMap::new();
    for (evaluator_id, score) in &input.scores {
        let cost = profile.evaluator_cost(evaluator_id).ok_or_else(|| {
            PoqError::data(format!(
                "record `{}` references unknown evaluator `{evaluator_id}`",
                record.record_id
            ))
        })?;
        let d = deviation(*score, consensus);
        let reward_e = evaluator_reward(closeness(d), cost, &config.reward_params);
        let stats = state
            .evaluator_stats
            .get_mut(evaluator_id)
            .expect("evaluator stats cover the profile");
        stats.rewards.push(reward_e);
        stats.deviation_sum += d;
        state.evaluator_total.push(reward_e);
        evaluator_rewards.insert(evaluator_id.clone(), reward_e);
        deviations.insert(evaluator_id.clone(), d);
    }

    // 8. trust updates
    for (evaluator_id, d) in &deviations {
        state
            .trust
            .update_weight(evaluator_id, *d, &config.trust_params)?;
    }

    let outcome = RoundOutcome {
        round_index: state.rounds_run,
        record_id: record.record_id.clone(),
        model_key: record.model_key.clone(),
        evaluator_subset: subset,
        submitted_scores: input.scores.into_iter().collect(),
        consensus,
        quality,
        inference_reward: reward_f,
        evaluator_rewards,
        deviations,
    };
    state.rounds_run += 1;
    if config.log_retention == LogRetention::Full {
        state.round_log.push(outcome.clone());
        state
            .weight_trajectory
            .push(state.trust.weights().values().copied().collect());
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardStats {
    pub avg: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub avg_reward: f64,
    pub reward_std: f64,
    /// Mean ground-truth proxy of the jobs served, rescaled to `[0, 1]`.
    pub avg_gt: Option<f64>,
    pub cost: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorSummary {
    pub evaluator: String,
    pub avg_reward: f64,
    pub reward_std: f64,
    pub avg_deviation: f64,
    pub cost: f64,
    pub jobs: usize,
    pub final_weight: f64,
    pub malicious: bool,
}

/// Aggregate outcome of one run. Averages are zero for entities with no jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config: SimConfig,
    pub rounds: usize,
    pub inference: RewardStats,
    pub evaluator: RewardStats,
    pub models: Vec<ModelSummary>,
    pub evaluators: Vec<EvaluatorSummary>,
    pub final_weights: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is always serializable")
    }
}

/// Summary plus the retained per-round detail.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub summary: RunSummary,
    pub rounds: Vec<RoundOutcome>,
    /// Evaluator ids in the column order of `weight_trajectory`.
    pub evaluator_ids: Vec<String>,
    /// Raw weights after each round, one row per round.
    pub weight_trajectory: Vec<Vec<f64>>,
    pub deviation_history: BTreeMap<String, Vec<f64>>,
}

/// The configuration as it actually acted on this pool: an attack that
/// controls no evaluator is dropped.
pub fn effective_config(config: &SimConfig, profile: &NetworkProfile) -> SimConfig {
    let mut effective = config.clone();
    if let Some(attack) = &config.attack {
        if malicious_count(profile.evaluator_count(), attack.rho) == 0 {
            effective.attack = None;
        }
    }
    effective
}

pub fn summarize(state: &EngineState, profile: &NetworkProfile, config: &SimConfig) -> RunSummary {
    let models = state
        .model_stats
        .iter()
        .map(|(model, acc)| ModelSummary {
            model: model.clone(),
            avg_reward: acc.rewards.mean(),
            reward_std: acc.rewards.std(),
            avg_gt: (acc.gt_count > 0).then(|| acc.gt_sum / acc.gt_count as f64 / SCORE_MAX),
            cost: profile.inference_cost(model).unwrap_or(0.0),
            jobs: acc.rewards.count,
        })
        .collect();
    let evaluators = state
        .evaluator_stats
        .iter()
        .map(|(evaluator, acc)| EvaluatorSummary {
            evaluator: evaluator.clone(),
            avg_reward: acc.rewards.mean(),
            reward_std: acc.rewards.std(),
            avg_deviation: if acc.rewards.count == 0 {
                0.0
            } else {
                acc.deviation_sum / acc.rewards.count as f64
            },
            cost: profile.evaluator_cost(evaluator).unwrap_or(0.0),
            jobs: acc.rewards.count,
            final_weight: state.trust.weight(evaluator).unwrap_or(0.0),
            malicious: state.malicious.contains(evaluator),
        })
        .collect();
    RunSummary {
        seed: config.rng_seed,
        config: effective_config(config, profile),
        rounds: state.rounds_run,
        inference: state.inference_total.stats(),
        evaluator: state.evaluator_total.stats(),
        models,
        evaluators,
        final_weights: state.trust.weights().clone(),
    }
}

/// Runs `config.rounds` rounds from a fresh state.
pub fn run_simulation(
    records: &[ScoreRecord],
    profile: &NetworkProfile,
    config: &SimConfig,
) -> Result<RunResult> {
    config.validate_for(records, profile)?;
    if let Some(first) = validate_dataset(records, profile).first() {
        return Err(PoqError::data(first.to_string()));
    }
    if records.is_empty() && config.rounds > 0 {
        return Err(PoqError::config("dataset is empty"));
    }

    let mut state = EngineState::new(profile, config);
    for _ in 0..config.rounds {
        run_round(&mut state, records, profile, config)?;
    }
    let summary = summarize(&state, profile, config);
    Ok(RunResult {
        summary,
        evaluator_ids: state.trust.weights().keys().cloned().collect(),
        deviation_history: state.trust.deviation_history().clone(),
        rounds: state.round_log,
        weight_trajectory: state.weight_trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AttackKind, AttackSpec};
    use crate::consensus::ConsensusRule;
    use crate::model::Task;

    fn profile(evaluators: usize) -> NetworkProfile {
        NetworkProfile::new(
            [("m1".to_string(), 1.0), ("m2".to_string(), 3.0)].into(),
            (0..evaluators)
                .map(|i| (format!("e{i}"), 0.01 * (i + 1) as f64))
                .collect(),
        )
        .unwrap()
    }

    fn records(n: usize, evaluators: usize) -> Vec<ScoreRecord> {
        (0..n)
            .map(|i| ScoreRecord {
                record_id: format!("r{i}"),
                task: if i % 2 == 0 {
                    Task::Qa
                } else {
                    Task::Summarization
                },
                model_key: if i % 3 == 0 { "m1" } else { "m2" }.into(),
                scores: (0..evaluators)
                    .map(|e| (format!("e{e}"), ((i * 7 + e * 3) % 11) as f64 * 10.0 / 10.0))
                    .collect(),
                gt_proxy: Some((i % 10) as f64),
            })
            .collect()
    }

    fn config(rounds: usize, k: usize) -> SimConfig {
        SimConfig {
            rounds,
            sample_size: k,
            rng_seed: 42,
            ..SimConfig::default()
        }
    }

    #[test]
    fn single_evaluator_agrees_with_itself() {
        let (p, recs) = (profile(5), records(20, 5));
        for rule in ConsensusRule::ALL {
            let cfg = SimConfig {
                consensus_rule: rule,
                ..config(50, 1)
            };
            let run = run_simulation(&recs, &p, &cfg).unwrap();
            for round in &run.rounds {
                let (id, score) = round.submitted_scores.iter().next().unwrap();
                assert_eq!(round.consensus, *score);
                assert_eq!(round.deviations[id], 0.0);
                let cost = p.evaluator_cost(id).unwrap();
                assert!((round.evaluator_rewards[id] - (1.0 - 0.5 * cost)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_round_by_hand() {
        let p = profile(3);
        let recs = vec![ScoreRecord {
            record_id: "only".into(),
            task: Task::Qa,
            model_key: "m1".into(),
            scores: [("e0", 2.0), ("e1", 4.0), ("e2", 9.0)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            gt_proxy: None,
        }];
        let cfg = SimConfig {
            consensus_rule: ConsensusRule::Median,
            ..config(1, 3)
        };
        let mut state = EngineState::new(&p, &cfg);
        let out = run_round(&mut state, &recs, &p, &cfg).unwrap();
        assert_eq!(out.consensus, 4.0);
        assert!((out.deviations["e0"] - 0.2).abs() < 1e-15);
        assert_eq!(out.deviations["e1"], 0.0);
        assert!((out.deviations["e2"] - 0.5).abs() < 1e-15);
        assert_eq!(out.quality, 0.4);
        // Weights move after rewards: e2 sat exactly on the fixed point.
        assert_eq!(state.trust.weight("e2"), Some(1.0));
        assert!((state.trust.weight("e1").unwrap() - 1.05).abs() < 1e-12);
    }

    #[test]
    fn zero_ratio_attack_is_a_no_op() {
        let (p, recs) = (profile(5), records(30, 5));
        let clean = run_simulation(&recs, &p, &config(300, 3)).unwrap();
        for kind in AttackKind::ALL {
            let cfg = SimConfig {
                attack: Some(AttackSpec::new(kind, 0.0)),
                ..config(300, 3)
            };
            let attacked = run_simulation(&recs, &p, &cfg).unwrap();
            assert_eq!(attacked.rounds, clean.rounds);
            assert_eq!(attacked.summary.to_json(), clean.summary.to_json());
        }
    }

    #[test]
    fn vacuous_run() {
        let (p, recs) = (profile(5), records(5, 5));
        let run = run_simulation(&recs, &p, &config(0, 3)).unwrap();
        assert_eq!(run.summary.rounds, 0);
        assert_eq!(run.summary.inference.count, 0);
        assert!(run
            .summary
            .models
            .iter()
            .all(|m| m.jobs == 0 && m.avg_reward == 0.0));
        assert!(run.rounds.is_empty());
    }

    #[test]
    fn accounting_and_bounds() {
        let (p, recs) = (profile(5), records(40, 5));
        let cfg = SimConfig {
            consensus_rule: ConsensusRule::TrimmedMean,
            attack: Some(AttackSpec::new(AttackKind::RandomNoise, 0.4)),
            ..config(500, 4)
        };
        let run = run_simulation(&recs, &p, &cfg).unwrap();
        let mut model_sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let mut eval_sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
        for round in &run.rounds {
            assert_eq!(round.evaluator_subset.len(), 4);
            assert_eq!(round.evaluator_rewards.len(), 4);
            let lo = round
                .submitted_scores
                .values()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let hi = round
                .submitted_scores
                .values()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(round.consensus >= lo && round.consensus <= hi);
            assert_eq!(round.quality, round.consensus / 10.0);
            let m = model_sums.entry(&round.model_key).or_default();
            m.0 += round.inference_reward;
            m.1 += 1;
            for (e, r) in &round.evaluator_rewards {
                let s = eval_sums.entry(e).or_default();
                s.0 += r;
                s.1 += round.deviations[e];
                s.2 += 1;
            }
        }
        for m in &run.summary.models {
            let (sum, n) = model_sums
                .get(m.model.as_str())
                .copied()
                .unwrap_or_default();
            assert_eq!(m.jobs, n);
            if n > 0 {
                assert!((m.avg_reward - sum / n as f64).abs() < 1e-9);
            }
        }
        for e in &run.summary.evaluators {
            let (sum, dev, n) = eval_sums[e.evaluator.as_str()];
            assert_eq!(e.jobs, n);
            assert_eq!(run.deviation_history[&e.evaluator].len(), n);
            assert!((e.avg_reward - sum / n as f64).abs() < 1e-9);
            assert!((e.avg_deviation - dev / n as f64).abs() < 1e-9);
            assert!(e.final_weight >= 0.1 && e.final_weight <= 3.0);
        }
        assert_eq!(run.weight_trajectory.len(), 500);
        assert_eq!(run.summary.inference.count, 500);
        assert_eq!(run.summary.evaluator.count, 2000);
    }

    #[test]
    fn pinned_weights_reduce_adaptive_to_mean() {
        let (p, recs) = (profile(5), records(30, 5));
        let mut pinned = config(400, 3);
        pinned.trust_params.lambda = 0.0;
        let mean = run_simulation(&recs, &p, &pinned).unwrap();
        let adaptive = run_simulation(
            &recs,
            &p,
            &SimConfig {
                consensus_rule: ConsensusRule::AdaptiveWeighted,
                ..pinned.clone()
            },
        )
        .unwrap();
        assert_eq!(mean.rounds, adaptive.rounds);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (p, recs) = (profile(5), records(30, 5));
        let a = run_simulation(&recs, &p, &config(200, 3)).unwrap();
        let b = run_simulation(&recs, &p, &config(200, 3)).unwrap();
        assert_eq!(a.summary.to_json(), b.summary.to_json());
        let c = run_simulation(
            &recs,
            &p,
            &SimConfig {
                rng_seed: 43,
                ..config(200, 3)
            },
        )
        .unwrap();
        assert_ne!(a.rounds, c.rounds);
    }

    #[test]
    fn precondition_errors() {
        let (p, recs) = (profile(5), records(5, 5));
        assert!(matches!(
            run_simulation(&recs, &p, &config(10, 9)),
            Err(PoqError::Config(_))
        ));
        assert!(matches!(
            run_simulation(&[], &p, &config(10, 3)),
            Err(PoqError::Config(_))
        ));
        let mut short = records(5, 5);
        short[2].scores.remove("e0");
        short[2].scores.remove("e1");
        short[2].scores.remove("e2");
        assert!(matches!(
            run_simulation(&short, &p, &config(10, 3)),
            Err(PoqError::Config(_))
        ));
        let mut unknown = records(5, 5);
        unknown[0].model_key = "ghost".into();
        assert!(matches!(
            run_simulation(&unknown, &p, &config(10, 3)),
            Err(PoqError::Data(_))
        ));
    }

    #[test]
    fn summary_only_keeps_no_log() {
        let (p, recs) = (profile(5), records(10, 5));
        let cfg = SimConfig {
            log_retention: LogRetention::SummaryOnly,
            ..config(100, 3)
        };
        let run = run_simulation(&recs, &p, &cfg).unwrap();
        assert!(run.rounds.is_empty() && run.weight_trajectory.is_empty());
        let full = run_simulation(&recs, &p, &config(100, 3)).unwrap();
        assert_eq!(run.summary.inference, full.summary.inference);
    }
}
