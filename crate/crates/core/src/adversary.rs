//! Threat model: malicious evaluator selection and score manipulation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PoqError, Result};
use crate::model::SCORE_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    RandomNoise,
    Boost,
    Sabotage,
    Strategic,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::RandomNoise,
        AttackKind::Strategic,
        AttackKind::Sabotage,
        AttackKind::Boost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::RandomNoise => "random_noise",
            AttackKind::Boost => "boost",
            AttackKind::Sabotage => "sabotage",
            AttackKind::Strategic => "strategic",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = PoqError;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|kind| kind.as_str() == s)
            .ok_or_else(|| {
                PoqError::config(format!(
                    "unknown attack `{s}` (expected random_noise, boost, sabotage or strategic)"
                ))
            })
    }
}

/// Attack strategy, its parameters, and the fraction of the pool it controls.
///
/// Every parameter is always present; `kind` decides which ones are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub rho: f64,
    /// Half-width of the uniform noise (random noise).
    pub r: f64,
    /// Fixed bias (boost, sabotage).
    pub b: f64,
    /// Deviation magnitude (strategic).
    pub delta: f64,
    /// Activation probability (strategic).
    pub p: f64,
}

impl AttackSpec {
    pub const DEFAULT_R: f64 = 3.0;
    pub const DEFAULT_B: f64 = 3.0;
    pub const DEFAULT_DELTA: f64 = 4.0;
    pub const DEFAULT_P: f64 = 0.3;

    pub fn new(kind: AttackKind, rho: f64) -> Self {
        Self {
            kind,
            rho,
            r: Self::DEFAULT_R,
            b: Self::DEFAULT_B,
            delta: Self::DEFAULT_DELTA,
            p: Self::DEFAULT_P,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(PoqError::config(format!(
                "malicious ratio rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        for (name, value) in [("r", self.r), ("b", self.b), ("delta", self.delta)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(PoqError::config(format!(
                    "attack parameter {name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(PoqError::config(format!(
                "attack probability p must lie in [0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Number of malicious evaluators for a pool of `pool_size`: `round(rho * n)`,
/// halves rounding away from zero.
pub fn malicious_count(pool_size: usize, rho: f64) -> usize {
    ((rho * pool_size as f64).round() as usize).min(pool_size)
}

/// Draws the static malicious subset, uniformly without replacement.
pub fn select_malicious<R: Rng + ?Sized>(pool: &[&str], rho: f64, rng: &mut R) -> BTreeSet<String> {
    let count = malicious_count(pool.len(), rho);
    index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].to_string())
        .collect()
}

/// Transforms an honest score according to the attack. Output stays in `[0, 10]`.
pub fn apply_attack<R: Rng + ?Sized>(score: f64, spec: &AttackSpec, rng: &mut R) -> f64 {
    match spec.kind {
        AttackKind::RandomNoise => {
            let u = if spec.r > 0.0 {
                rng.random_range(-spec.r..=spec.r)
            } else {
                0.0
            };
            (score + u).clamp(0.0, SCORE_MAX)
        }
        AttackKind::Boost => (score + spec.b).min(SCORE_MAX),
        AttackKind::Sabotage => (score - spec.b).max(0.0),
        AttackKind::Strategic => {
            if rng.random_bool(spec.p) {
                let direction = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (score + direction * spec.delta).clamp(0.0, SCORE_MAX)
            } else {
                score
            }
        }
    }
}
