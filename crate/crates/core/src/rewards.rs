//! Cost-aware reward functions.
//!
//! Rewards are not floored: a low-quality, expensive job can pay a negative
//! amount.

use crate::model::RewardParams;

/// Quadratic shortfall below the quality threshold `tau`.
pub fn threshold_penalty(quality: f64, params: &RewardParams) -> f64 {
    if quality < params.tau {
        (params.tau - quality).powi(2)
    } else {
        0.0
    }
}

/// Capped bonus for high quality at low cost.
pub fn efficiency_bonus(quality: f64, cost: f64, params: &RewardParams) -> f64 {
    (params.eta * quality * (1.0 - cost)).min(params.b_max)
}

/// Inference reward: base term minus penalty plus bonus.
pub fn inference_reward(quality: f64, cost: f64, params: &RewardParams) -> f64 {
    let base = params.alpha_f * quality - params.beta_f * cost;
    base - threshold_penalty(quality, params) + efficiency_bonus(quality, cost, params)
}

pub fn closeness(deviation: f64) -> f64 {
    (1.0 - deviation).max(0.0)
}

pub fn evaluator_reward(closeness: f64, cost: f64, params: &RewardParams) -> f64 {
    params.alpha_m * closeness - params.beta_m * cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn inference_examples() {
        let p = RewardParams::default();
        assert!((inference_reward(0.0, 0.0, &p) - -0.09).abs() < TOL);
        assert!((inference_reward(1.0, 1.0, &p) - 0.5).abs() < TOL);
        assert!((inference_reward(1.0, 0.0, &p) - 1.2).abs() < TOL);
    }

    #[test]
    fn closeness_examples() {
        assert_eq!(closeness(0.0), 1.0);
        assert_eq!(closeness(1.0), 0.0);
        assert!((closeness(0.2) - 0.8).abs() < TOL);
    }

    #[test]
    fn evaluator_examples() {
        let p = RewardParams::default();
        assert_eq!(evaluator_reward(1.0, 0.0, &p), 1.0);
        assert_eq!(evaluator_reward(0.0, 1.0, &p), -0.5);
        assert!((evaluator_reward(0.8, 0.2, &p) - 0.7).abs() < TOL);
    }

    #[test]
    fn penalty_is_continuous_at_threshold() {
        let p = RewardParams::default();
        assert_eq!(threshold_penalty(p.tau, &p), 0.0);
        assert!(threshold_penalty(p.tau - 1e-6, &p) > 0.0);
        assert!(threshold_penalty(p.tau - 1e-6, &p) < 1e-11);
    }

    proptest! {
        #[test]
        fn monotone_in_quality_and_cost(
            q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0,
            c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0,
        ) {
            let p = RewardParams::default();
            let (lo_q, hi_q) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let (lo_c, hi_c) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(inference_reward(lo_q, c1, &p) <= inference_reward(hi_q, c1, &p) + TOL);
            prop_assert!(inference_reward(q1, hi_c, &p) <= inference_reward(q1, lo_c, &p) + TOL);
            let bonus = efficiency_bonus(q1, c1, &p);
            prop_assert!((0.0..=p.b_max).contains(&bonus));
            prop_assert_eq!(threshold_penalty(q1, &p) == 0.0, q1 >= p.tau);
        }

        #[test]
        fn evaluator_reward_is_affine(
            a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0,
            c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0,
        ) {
            let p = RewardParams::default();
            let diff = evaluator_reward(a1, c1, &p) - evaluator_reward(a2, c2, &p);
            prop_assert!((diff - (p.alpha_m * (a1 - a2) - p.beta_m * (c1 - c2))).abs() < TOL);
        }
    }
}
