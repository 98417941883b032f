//! Per-evaluator trust weights driven by deviation from consensus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PoqError, Result};
use crate::model::{TrustParams, SCORE_MAX};

/// Normalized distance `|score - consensus| / 10`, in `[0, 1]`.
pub fn deviation(score: f64, consensus: f64) -> f64 {
    ((score - consensus).abs() / SCORE_MAX).clamp(0.0, 1.0)
}

/// One multiplicative step: `clip(w * (1 + lambda * (0.5 - d)), w_min, w_max)`.
pub fn step_weight(weight: f64, deviation: f64, params: &TrustParams) -> f64 {
    (weight * (1.0 + params.lambda * (0.5 - deviation))).clamp(params.w_min, params.w_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    weights: BTreeMap<String, f64>,
    deviation_history: BTreeMap<String, Vec<f64>>,
}

impl TrustState {
    /// Starts every evaluator in the pool at `params.w_init`.
    pub fn new<'a>(pool: impl IntoIterator<Item = &'a str>, params: &TrustParams) -> Self {
        let weights: BTreeMap<String, f64> = pool
            .into_iter()
            .map(|id| (id.to_string(), params.w_init))
            .collect();
        let deviation_history = weights.keys().map(|id| (id.clone(), Vec::new())).collect();
        Self {
            weights,
            deviation_history,
        }
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn weight(&self, evaluator_id: &str) -> Option<f64> {
        self.weights.get(evaluator_id).copied()
    }

    pub fn deviation_history(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.deviation_history
    }

    /// Applies one update for `evaluator_id` and records the deviation.
    /// Returns the new raw weight.
    pub fn update_weight(
        &mut self,
        evaluator_id: &str,
        deviation: f64,
        params: &TrustParams,
    ) -> Result<f64> {
        let weight = self.weights.get_mut(evaluator_id).ok_or_else(|| {
            PoqError::protocol(format!("unknown evaluator `{evaluator_id}` in trust state"))
        })?;
        *weight = step_weight(*weight, deviation, params);
        let updated = *weight;
        self.deviation_history
            .get_mut(evaluator_id)
            .expect("history tracks the same pool as weights")
            .push(deviation);
        Ok(updated)
    }

    /// Weights rescaled so their mean over the full pool is 1.
    pub fn normalized_weights(&self) -> BTreeMap<String, f64> {
        let total: f64 = self.weights.values().sum();
        let n = self.weights.len() as f64;
        self.weights
            .iter()
            .map(|(id, w)| (id.clone(), w * n / total))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(lambda: f64) -> TrustParams {
        TrustParams {
            lambda,
            ..TrustParams::default()
        }
    }

    fn state_with(weights: &[(&str, f64)]) -> TrustState {
        let mut state = TrustState::new(weights.iter().map(|(id, _)| *id), &TrustParams::default());
        for (id, w) in weights {
            state.weights.insert(id.to_string(), *w);
        }
        state
    }

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation(5.0, 5.0), 0.0);
        assert_eq!(deviation(0.0, 10.0), 1.0);
        assert!((deviation(7.0, 5.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn update_examples() {
        let p = params(0.1);
        assert_eq!(step_weight(1.0, 0.5, &p), 1.0);
        assert!((step_weight(1.0, 0.2, &p) - 1.03).abs() < 1e-12);
        assert_eq!(step_weight(2.99, 0.0, &p), 3.0);
    }

    #[test]
    fn update_records_history_and_rejects_unknown() {
        let mut state = state_with(&[("a", 1.0)]);
        let w = state.update_weight("a", 0.2, &params(0.1)).unwrap();
        assert!((w - 1.03).abs() < 1e-12);
        assert_eq!(state.deviation_history()["a"], vec![0.2]);
        assert!(matches!(
            state.update_weight("b", 0.2, &params(0.1)),
            Err(PoqError::Protocol(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let uniform = state_with(&[("a", 1.0), ("b", 1.0), ("c", 1.0)]);
        assert_eq!(
            uniform
                .normalized_weights()
                .values()
                .copied()
                .collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0]
        );
        let skewed = state_with(&[("a", 2.0), ("b", 1.0), ("c", 1.0)]);
        assert_eq!(
            skewed
                .normalized_weights()
                .values()
                .copied()
                .collect::<Vec<_>>(),
            vec![1.5, 0.75, 0.75]
        );
        assert_eq!(state_with(&[("a", 0.5)]).normalized_weights()["a"], 1.0);
    }

    proptest! {
        #[test]
        fn direction_of_update(w in 0.1f64..=3.0, d in 0.0f64..=1.0, lambda in 0.01f64..1.0) {
            let p = params(lambda);
            let next = step_weight(w, d, &p);
            prop_assert!(next >= p.w_min && next <= p.w_max);
            if d < 0.5 && w < p.w_max {
                prop_assert!(next > w);
            } else if d > 0.5 && w > p.w_min {
                prop_assert!(next < w);
            } else if d == 0.5 {
                prop_assert_eq!(next, w);
            }
        }

        #[test]
        fn normalization_is_scale_invariant(
            ws in proptest::collection::vec(0.1f64..3.0, 1..8),
            c in 0.01f64..100.0,
        ) {
            let named: Vec<(String, f64)> =
                ws.iter().enumerate().map(|(i, w)| (format!("e{i}"), *w)).collect();
            let scaled: Vec<(String, f64)> =
                named.iter().map(|(id, w)| (id.clone(), w * c)).collect();
            let a = state_with(&named.iter().map(|(i, w)| (i.as_str(), *w)).collect::<Vec<_>>())
                .normalized_weights();
            let b = state_with(&scaled.iter().map(|(i, w)| (i.as_str(), *w)).collect::<Vec<_>>())
                .normalized_weights();
            let mean = a.values().sum::<f64>() / a.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
            for (id, v) in &a {
                prop_assert!((v - b[id]).abs() < 1e-9);
            }
        }
    }
}
