use criterion::{criterion_group, criterion_main, Criterion};
use leakbound::{
    mai_gradient_attack, noisy_marginals, Categorical, ConditionalPriorTable, MaiConfig,
    MaiProblem, MarginalWorkload, Value,
};
use std::collections::BTreeMap;
use std::hint::black_box;

fn instance() -> (MarginalWorkload, Vec<Vec<usize>>, ConditionalPriorTable) {
    let workload = MarginalWorkload::all_k(vec![5, 5, 5, 5], 3).unwrap();
    let known: Vec<Vec<usize>> = (0..200)
        .map(|r| vec![r % 5, (r / 5) % 5, (r / 25) % 5])
        .collect();
    let mut table = BTreeMap::new();
    for a in 0..5usize {
        for b in 0..5usize {
            for c in 0..5usize {
                let mut probs = vec![0.15; 5];
                probs[(a + 2 * c) % 5] = 0.4;
                table.insert(
                    vec![a as i64, b as i64, c as i64],
                    Categorical::new((0..5).map(Value::Int).collect(), probs).unwrap(),
                );
            }
        }
    }
    (workload, known, ConditionalPriorTable::new(table).unwrap())
}

fn bench_noisy_marginals(c: &mut Criterion) {
    let (workload, known, _) = instance();
    let rows: Vec<Vec<usize>> = known
        .iter()
        .map(|k| vec![k[0], k[1], k[2], (k[0] + 2 * k[2]) % 5])
        .collect();
    c.bench_function("noisy_marginals/200x4", |b| {
        b.iter(|| noisy_marginals(black_box(&rows), &workload, 4.0, 7).unwrap())
    });
}

fn bench_mai_gradient(c: &mut Criterion) {
    let (workload, known, cond) = instance();
    let rows: Vec<Vec<usize>> = known
        .iter()
        .map(|k| vec![k[0], k[1], k[2], (k[0] + 2 * k[2]) % 5])
        .collect();
    let released = noisy_marginals(&rows, &workload, 4.0, 7).unwrap();
    let problem = MaiProblem {
        workload: &workload,
        known_attrs: &[0, 1, 2],
        unknown_attrs: &[3],
        known_values: &known,
        cond_prior: &cond,
    };
    let cfg = MaiConfig {
        step: 50.0,
        iters: 50,
    };
    c.bench_function("mai_gradient/200x50iters", |b| {
        b.iter(|| mai_gradient_attack(black_box(&released), &problem, &cfg).unwrap())
    });
}

criterion_group!(benches, bench_noisy_marginals, bench_mai_gradient);
criterion_main!(benches);
