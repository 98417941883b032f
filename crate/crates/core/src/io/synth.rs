//! Synthetic score datasets.
//!
//! Each record draws a ground-truth proxy `gt` in `[0, 10]` from a per-task
//! Beta distribution, scaled by the serving model's skill. Every evaluator is
//! a linear channel over that proxy:
//!
//! ```text
//! base  = gt          (sign = +1)
//!       = 10 - gt     (sign = -1)
//! score = clip(scale * base + bias + N(0, noise_std), 0, 10)
//! ```
//!
//! so a `+1` evaluator with unit scale, zero bias and zero noise reproduces
//! `gt` exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{PoqError, Result};
use crate::model::{NetworkProfile, ScoreRecord, Task, SCORE_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorChannel {
    pub bias: f64,
    pub noise_std: f64,
    pub correlation_sign: i8,
    /// Slope on the signed proxy; 1 when absent.
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl EvaluatorChannel {
    pub fn new(bias: f64, noise_std: f64, correlation_sign: i8) -> Self {
        Self {
            bias,
            noise_std,
            correlation_sign,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Bias-free, noise-free, positively signed: scores equal the proxy.
    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 1)
    }
}

/// Beta(alpha, beta) on `[0, 1]`, rescaled to the score range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtDistribution {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGenSpec {
    pub n_records: usize,
    pub evaluator_profiles: BTreeMap<String, EvaluatorChannel>,
    pub task_mix: BTreeMap<Task, f64>,
    pub gt_distribution: BTreeMap<Task, GtDistribution>,
    /// Multiplier in `(0, 1]` on the proxy of each model's outputs; 1 when absent.
    #[serde(default)]
    pub model_skill: BTreeMap<String, f64>,
    pub seed: u64,
}

impl SyntheticGenSpec {
    pub fn validate(&self, profile: &NetworkProfile) -> Result<()> {
        if self.n_records == 0 {
            return Err(PoqError::config("n_records must be positive"));
        }
        if self.evaluator_profiles.is_empty() {
            return Err(PoqError::config(
                "at least one evaluator profile is required",
            ));
        }
        for (id, ch) in &self.evaluator_profiles {
            if !profile.evaluators().contains_key(id) {
                return Err(PoqError::config(format!(
                    "evaluator `{id}` is not in the network profile"
                )));
            }
            if !(ch.noise_std.is_finite() && ch.noise_std >= 0.0)
                || !ch.bias.is_finite()
                || !(ch.scale.is_finite() && ch.scale > 0.0)
            {
                return Err(PoqError::config(format!(
                    "evaluator `{id}`: bias must be finite, noise_std non-negative, scale positive"
                )));
            }
            if ch.correlation_sign != 1 && ch.correlation_sign != -1 {
                return Err(PoqError::config(format!(
                    "evaluator `{id}`: correlation_sign must be +1 or -1"
                )));
            }
        }
        let total: f64 = self.task_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 || self.task_mix.values().any(|f| *f < 0.0) {
            return Err(PoqError::config(format!(
                "task mix fractions must be non-negative and sum to 1, got {total}"
            )));
        }
        for (task, frac) in &self.task_mix {
            if *frac > 0.0 {
                let dist = self.gt_distribution.get(task).ok_or_else(|| {
                    PoqError::config(format!("no gt distribution for task {task}"))
                })?;
                if !(dist.alpha > 0.0 && dist.beta > 0.0) {
                    return Err(PoqError::config(format!(
                        "gt distribution for {task} needs positive shape parameters"
                    )));
                }
            }
        }
        for (model, skill) in &self.model_skill {
            if !profile.inference_models().contains_key(model) {
                return Err(PoqError::config(format!(
                    "model `{model}` is not in the network profile"
                )));
            }
            if !(*skill > 0.0 && *skill <= 1.0) {
                return Err(PoqError::config(format!(
                    "model `{model}`: skill must lie in (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Generates `spec.n_records` records. Models are assigned round-robin in
/// profile order; everything else is drawn from a ChaCha stream seeded by
/// `spec.seed`.
pub fn generate_synthetic(
    spec: &SyntheticGenSpec,
    profile: &NetworkProfile,
) -> Result<Vec<ScoreRecord>> {
    spec.validate(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let models: Vec<&String> = profile.inference_models().keys().collect();

    let mix: Vec<(Task, f64)> = spec
        .task_mix
        .iter()
        .filter(|(_, f)| **f > 0.0)
        .map(|(t, f)| (*t, *f))
        .collect();
    let betas: BTreeMap<Task, Beta<f64>> = mix
        .iter()
        .map(|(task, _)| {
            let d = spec.gt_distribution[task];
            let beta = Beta::new(d.alpha, d.beta)
                .map_err(|e| PoqError::config(format!("gt distribution for {task}: {e}")))?;
            Ok((*task, beta))
        })
        .collect::<Result<_>>()?;
    let noises: BTreeMap<&String, Option<Normal<f64>>> = spec
        .evaluator_profiles
        .iter()
        .map(|(id, ch)| {
            let normal = (ch.noise_std > 0.0)
                .then(|| Normal::new(0.0, ch.noise_std).expect("validated std"));
            (id, normal)
        })
        .collect();

    let mut records = Vec::with_capacity(spec.n_records);
    for i in 0..spec.n_records {
        let task = pick_task(&mix, rng.random::<f64>());
        let model = models[i % models.len()];
        let skill = spec.model_skill.get(model).copied().unwrap_or(1.0);
        let gt = (SCORE_MAX * skill * betas[&task].sample(&mut rng)).clamp(0.0, SCORE_MAX);

        let scores = spec
            .evaluator_profiles
            .iter()
            .map(|(id, ch)| {
                let base = if ch.correlation_sign > 0 {
                    gt
                } else {
                    SCORE_MAX - gt
                };
                let noise = noises[id].map_or(0.0, |n| n.sample(&mut rng));
                (
                    id.clone(),
                    (ch.scale * base + ch.bias + noise).clamp(0.0, SCORE_MAX),
                )
            })
            .collect();

        records.push(ScoreRecord {
            record_id: format!("syn-{i:06}"),
            task,
            model_key: model.clone(),
            scores,
            gt_proxy: Some(gt),
        });
    }
    Ok(records)
}

/// Reads a JSON-encoded [`SyntheticGenSpec`].
pub fn load_spec(path: &Path) -> Result<SyntheticGenSpec> {
    let text = fs::read_to_string(path).map_err(|e| PoqError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PoqError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn pick_task(mix: &[(Task, f64)], u: f64) -> Task {
    let mut acc = 0.0;
    for (task, frac) in mix {
        acc += frac;
        if u < acc {
            return *task;
        }
    }
    mix.last().map(|(t, _)| *t).unwrap_or(Task::Other)
}

/// Illustrative five-model, five-evaluator pool. Latencies are chosen so the
/// normalized costs spread over `[0, 1]` with one slow model and one slow
/// evaluator.
pub fn default_profile() -> NetworkProfile {
    let models = [
        ("model_a", 1.892),
        ("model_b", 1.776),
        ("model_c", 1.0),
        ("model_d", 5.0),
        ("model_e", 4.372),
    ];
    let evaluators = [
        ("bi_a", 0.00296),
        ("bi_b", 0.0032),
        ("bi_c", 0.003968),
        ("ce_a", 0.002),
        ("ce_b", 0.05),
    ];
    NetworkProfile::new(
        models.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        evaluators
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    )
    .expect("static latencies are positive")
}

/// Heterogeneous pool over [`default_profile`]: three tight bi-encoders, one
/// noisy cross-encoder, and one anti-correlated cross-encoder. Evaluator
/// scores sit in the upper half of the range with a compressed slope, the way
/// similarity scores sit above a token-overlap proxy.
pub fn default_spec(n_records: usize, seed: u64) -> SyntheticGenSpec {
    SyntheticGenSpec {
        n_records,
        evaluator_profiles: [
            ("bi_a", EvaluatorChannel::new(6.0, 1.0, 1).with_scale(0.45)),
            ("bi_b", EvaluatorChannel::new(6.3, 1.1, 1).with_scale(0.45)),
            ("bi_c", EvaluatorChannel::new(5.7, 1.05, 1).with_scale(0.45)),
            ("ce_a", EvaluatorChannel::new(6.0, 2.5, 1).with_scale(0.45)),
            ("ce_b", EvaluatorChannel::new(4.0, 1.5, -1).with_scale(0.5)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        task_mix: [(Task::Qa, 0.5), (Task::Summarization, 0.5)].into(),
        gt_distribution: [
            (
                Task::Qa,
                GtDistribution {
                    alpha: 1.2,
                    beta: 1.0,
                },
            ),
            (
                Task::Summarization,
                GtDistribution {
                    alpha: 3.0,
                    beta: 6.0,
                },
            ),
        ]
        .into(),
        model_skill: [
            ("model_a", 1.0),
            ("model_b", 0.95),
            ("model_c", 0.55),
            ("model_d", 0.45),
            ("model_e", 0.4),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        seed,
    }
}
