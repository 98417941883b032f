//! Consensus rules: mean, median, trimmed mean and trust-weighted mean.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PoqError, Result};

/// Defense rule used to turn submitted scores into a consensus score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusRule {
    Mean,
    Median,
    TrimmedMean,
    AdaptiveWeighted,
}

impl ConsensusRule {
    pub const ALL: [ConsensusRule; 4] = [
        ConsensusRule::Mean,
        ConsensusRule::Median,
        ConsensusRule::TrimmedMean,
        ConsensusRule::AdaptiveWeighted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConsensusRule::Mean => "mean",
            ConsensusRule::Median => "median",
            ConsensusRule::TrimmedMean => "trimmed_mean",
            ConsensusRule::AdaptiveWeighted => "adaptive_weighted",
        }
    }

    pub fn uses_weights(self) -> bool {
        self == ConsensusRule::AdaptiveWeighted
    }

    /// Applies the rule to `input`. `gamma` is only read by the trimmed mean.
    pub fn apply(self, input: &ConsensusInput, gamma: f64) -> Result<f64> {
        match self {
            ConsensusRule::Mean => consensus_mean(input),
            ConsensusRule::Median => consensus_median(input),
            ConsensusRule::TrimmedMean => consensus_trimmed_mean(input, gamma),
            ConsensusRule::AdaptiveWeighted => consensus_weighted(input),
        }
    }
}

impl fmt::Display for ConsensusRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConsensusRule {
    type Err = PoqError;

    fn from_str(s: &str) -> Result<Self> {
        ConsensusRule::ALL
            .into_iter()
            .find(|rule| rule.as_str() == s)
            .ok_or_else(|| {
                PoqError::config(format!(
                    "unknown consensus rule `{s}` (expected mean, median, trimmed_mean or adaptive_weighted)"
                ))
            })
    }
}

/// Scores submitted for one job, plus optional normalized trust weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsensusInput {
    pub scores: Vec<(String, f64)>,
    pub weights: Option<BTreeMap<String, f64>>,
}

impl ConsensusInput {
    pub fn new(scores: Vec<(String, f64)>) -> Self {
        Self {
            scores,
            weights: None,
        }
    }

    pub fn with_weights(mut self, weights: BTreeMap<String, f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    fn values(&self) -> Result<Vec<f64>> {
        if self.scores.is_empty() {
            return Err(PoqError::protocol("consensus over an empty score set"));
        }
        Ok(self.scores.iter().map(|(_, s)| *s).collect())
    }
}

pub fn consensus_mean(input: &ConsensusInput) -> Result<f64> {
    Ok(mean_of(&input.values()?))
}

pub fn consensus_median(input: &ConsensusInput) -> Result<f64> {
    let mut values = input.values()?;
    sort_scores(&mut values);
    Ok(median_of_sorted(&values))
}

/// Trimmed mean with `m = max(1, floor(gamma * K))` scores cut from each end.
///
/// When fewer than one score would survive the cut the median is returned.
pub fn consensus_trimmed_mean(input: &ConsensusInput, gamma: f64) -> Result<f64> {
    let mut values = input.values()?;
    sort_scores(&mut values);
    Ok(trimmed_mean_of_sorted(&values, gamma))
}

/// Trust-weighted mean over the submitted scores.
pub fn consensus_weighted(input: &ConsensusInput) -> Result<f64> {
    if input.scores.is_empty() {
        return Err(PoqError::protocol("consensus over an empty score set"));
    }
    let weights = input
        .weights
        .as_ref()
        .ok_or_else(|| PoqError::protocol("weighted consensus requires trust weights"))?;

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (evaluator_id, score) in &input.scores {
        let w = *weights.get(evaluator_id).ok_or_else(|| {
            PoqError::protocol(format!("no trust weight for evaluator `{evaluator_id}`"))
        })?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(PoqError::protocol(format!(
                "invalid trust weight {w} for evaluator `{evaluator_id}`"
            )));
        }
        numerator += w * score;
        denominator += w;
    }
    if denominator <= 0.0 {
        return Err(PoqError::protocol(
            "trust weights of the sampled evaluators sum to zero",
        ));
    }
    Ok((numerator / denominator).clamp(min_of(&input.scores), max_of(&input.scores)))
}

fn min_of(scores: &[(String, f64)]) -> f64 {
    scores.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min)
}

fn max_of(scores: &[(String, f64)]) -> f64 {
    scores
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sort_scores(values: &mut [f64]) {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    }
}

/// Number of scores trimmed from each end for a sample of size `k`.
pub fn trim_count(k: usize, gamma: f64) -> usize {
    ((gamma * k as f64).floor() as usize).max(1)
}

pub(crate) fn trimmed_mean_of_sorted(sorted: &[f64], gamma: f64) -> f64 {
    let k = sorted.len();
    let m = trim_count(k, gamma);
    if k < 2 * m + 1 {
        return median_of_sorted(sorted);
    }
    mean_of(&sorted[m..k - m])
}
