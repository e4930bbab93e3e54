//! Timing harness for the sampler hot paths.  The sweep benches double as
//! the measured (not asserted) check that one sweep scales linearly in
//! n x T: compare the per-iteration times across the size grid.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use bta_core::context::EvalContext;
use bta_core::engine::{initial_state, sweep, SweepConfig, SweepStats};
use bta_core::families::{gev_eval, logistic_eval, quantile_eval};
use bta_core::latent::{log_marginal_index, ridge_summary};
use bta_core::model::{Dataset, Family, ModelSpec, OutcomeSpec, TheorySpec};

fn synthetic_system(n: usize, t_count: usize, seed: u64) -> (ModelSpec, Dataset) {
    let mut gen = Xoshiro256PlusPlus::seed_from_u64(seed);
    let theories = (0..t_count)
        .map(|t| TheorySpec {
            name: format!("t{t}"),
            proxy_names: (0..3).map(|j| format!("x{t}_{j}")).collect(),
            nu: 1.0,
        })
        .collect();
    let spec = ModelSpec {
        theories,
        outcomes: vec![
            OutcomeSpec {
                name: "bin".into(),
                family: Family::Logistic,
            },
            OutcomeSpec {
                name: "q".into(),
                family: Family::Quantile { tau: 0.9 },
            },
        ],
    };
    let proxies: Vec<DMatrix<f64>> = (0..t_count)
        .map(|_| DMatrix::from_fn(n, 3, |_, _| gen.random::<f64>() * 2.0 - 1.0))
        .collect();
    let signal: Vec<f64> = (0..n)
        .map(|i| proxies[0][(i, 0)] * 1.5 + gen.random::<f64>() - 0.5)
        .collect();
    let outcomes = DMatrix::from_fn(n, 2, |i, r| {
        if r == 0 {
            f64::from(gen.random::<f64>() < 1.0 / (1.0 + (-signal[i]).exp()))
        } else {
            signal[i] + 2.0 * gen.random::<f64>() - 1.0
        }
    });
    let data = Dataset::new(proxies, outcomes, vec![true; n * 2], vec![], vec![]).unwrap();
    (spec, data)
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for &(n, t_count) in &[(100usize, 1usize), (200, 1), (400, 1), (200, 2), (200, 4)] {
        let (spec, data) = synthetic_system(n, t_count, 42);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let cfg = SweepConfig::default();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_T{t_count}")),
            &(n, t_count),
            |b, _| {
                let mut state = initial_state(&spec, &data);
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
                let mut stats = SweepStats::default();
                b.iter(|| {
                    sweep(&mut state, &ctx, &cfg, &mut rng, &mut stats).unwrap();
                    state.indices[(0, 0)]
                });
            },
        );
    }
    group.finish();
}

fn bench_family_evals(c: &mut Criterion) {
    let mut group = c.benchmark_group("family_eval");
    group.bench_function("logistic", |b| {
        let mut x = 0.1f64;
        b.iter(|| {
            x = (x * 1.000001).min(3.0);
            logistic_eval(1.0, x)
        });
    });
    group.bench_function("quantile", |b| {
        let mut x = 0.1f64;
        b.iter(|| {
            x = (x * 1.000001).min(3.0);
            quantile_eval(0.4, x, 0.2, 0.9)
        });
    });
    group.bench_function("gev", |b| {
        let mut x = 0.1f64;
        b.iter(|| {
            x = (x * 1.000001).min(1.0);
            gev_eval(0.4, x, 0.0, 0.2).unwrap()
        });
    });
    group.finish();
}

fn bench_ridge(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let x = DMatrix::from_fn(500, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let idx = DVector::from_fn(500, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    c.bench_function("ridge_summary_n500_p3", |b| {
        b.iter(|| ridge_summary(&x, &idx, 1.0).unwrap().logdet_xi)
    });
    c.bench_function("log_marginal_n500_p3", |b| {
        b.iter(|| log_marginal_index(&x, &idx, 1.0).unwrap())
    });
}

criterion_group!(benches, bench_sweep, bench_family_evals, bench_ridge);
criterion_main!(benches);
