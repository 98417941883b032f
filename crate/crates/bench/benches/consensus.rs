use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use poq_bench::score_lists;
use poq_core::{ConsensusInput, ConsensusRule};

fn rules(c: &mut Criterion) {
    let mut group = c.benchmark_group("consensus");
    for k in [3, 5, 15] {
        let inputs: Vec<ConsensusInput> = score_lists(256, k)
            .into_iter()
            .map(|scores| {
                let weights = scores.iter().map(|(id, _)| (id.clone(), 1.0)).collect();
                ConsensusInput::new(scores).with_weights(weights)
            })
            .collect();
        for rule in ConsensusRule::ALL {
            group.bench_with_input(BenchmarkId::new(rule.as_str(), k), &inputs, |b, inputs| {
                b.iter(|| {
                    for input in inputs {
                        black_box(rule.apply(black_box(input), 0.2).unwrap());
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, rules);
criterion_main!(benches);
