//! Shared fixtures for the benchmarks.

use poq_core::io::{default_profile, default_spec, generate_synthetic};
use poq_core::{NetworkProfile, ScoreRecord};

/// The built-in synthetic pool with `n` records.
pub fn fixture(n: usize) -> (Vec<ScoreRecord>, NetworkProfile) {
    let profile = default_profile();
    let records =
        generate_synthetic(&default_spec(n, 0), &profile).expect("built-in spec is valid");
    (records, profile)
}

/// Deterministic score lists of length `k` spread over `[0, 10]`.
pub fn score_lists(count: usize, k: usize) -> Vec<Vec<(String, f64)>> {
    (0..count)
        .map(|i| {
            (0..k)
                .map(|j| (format!("e{j}"), ((i * 7 + j * 13) % 101) as f64 / 10.0))
                .collect()
        })
        .collect()
}
