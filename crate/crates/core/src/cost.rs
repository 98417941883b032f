//! Latency to cost conversion.
//!
//! Costs are min-max normalized within a role (inference models or
//! evaluators), so the fastest member costs 0 and the slowest costs 1.

use std::collections::BTreeMap;

use crate::error::{PoqError, Result};

/// Min-max normalizes a latency map into costs in `[0, 1]`.
///
/// A set with no spread (a singleton, or all latencies equal) maps every
/// member to cost 0: there is no relative cost signal to report.
pub fn normalize_costs(latencies: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if latencies.is_empty() {
        return Err(PoqError::config("cannot normalize an empty latency set"));
    }
    for (key, &latency) in latencies {
        if !(latency.is_finite() && latency > 0.0) {
            return Err(PoqError::data(format!(
                "latency for `{key}` must be finite and positive, got {latency}"
            )));
        }
    }

    let min = latencies.values().copied().fold(f64::INFINITY, f64::min);
    let max = latencies
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;

    Ok(latencies
        .iter()
        .map(|(key, &latency)| {
            let cost = if spread > 0.0 {
                ((latency - min) / spread).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (key.clone(), cost)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn three_members() {
        let costs = normalize_costs(&map(&[("a", 1.0), ("b", 3.0), ("c", 2.0)])).unwrap();
        assert_eq!(costs, map(&[("a", 0.0), ("b", 1.0), ("c", 0.5)]));
    }

    #[test]
    fn degenerate_sets_cost_nothing() {
        assert_eq!(
            normalize_costs(&map(&[("a", 2.0)])).unwrap(),
            map(&[("a", 0.0)])
        );
        assert_eq!(
            normalize_costs(&map(&[("a", 5.0), ("b", 5.0)])).unwrap(),
            map(&[("a", 0.0), ("b", 0.0)])
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            normalize_costs(&BTreeMap::new()),
            Err(PoqError::Config(_))
        ));
        assert!(matches!(
            normalize_costs(&map(&[("a", 1.0), ("b", 0.0)])),
            Err(PoqError::Data(_))
        ));
        assert!(matches!(
            normalize_costs(&map(&[("a", -1.0)])),
            Err(PoqError::Data(_))
        ));
    }

    proptest! {
        #[test]
        fn affine_invariant_and_monotone(
            lat in proptest::collection::vec(0.01f64..100.0, 1..8),
            scale in 0.1f64..10.0,
            shift in 0.0f64..5.0,
        ) {
            let base: BTreeMap<String, f64> =
                lat.iter().enumerate().map(|(i, v)| (format!("k{i}"), *v)).collect();
            let moved: BTreeMap<String, f64> =
                base.iter().map(|(k, v)| (k.clone(), scale * v + shift)).collect();
            let a = normalize_costs(&base).unwrap();
            let b = normalize_costs(&moved).unwrap();
            for (k, ca) in &a {
                prop_assert!((0.0..=1.0).contains(ca));
                prop_assert!((ca - b[k]).abs() < 1e-9);
            }
            for (k1, l1) in &base {
                for (k2, l2) in &base {
                    if l1 < l2 {
                        prop_assert!(a[k1] <= a[k2]);
                    }
                }
            }
        }
    }
}
