use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robust_risk::exec::{with_mode, ExecMode};
use robust_risk::experiments::{hedge_paths, HedgingConfig};
use robust_risk::nominal::sample;
use robust_risk::{dual, Divergence, NominalModel, RobustProblem, SolverOptions};

const MODES: [(&str, ExecMode); 2] = [("parallel", ExecMode::Parallel), ("sequential", ExecMode::Sequential)];

fn ball_solve(c: &mut Criterion) {
    let data = sample(&NominalModel::gaussian(0.0, 1.0).unwrap(), 100_000, 7).unwrap();
    let prob = RobustProblem::ball(Divergence::cvar_indicator(0.95).unwrap(), Divergence::kl(), 0.1);
    let opts = SolverOptions::default();
    let mut g = c.benchmark_group("ball_solve_n100k");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_mode(mode, || dual::solve(black_box(&prob), &data, &opts).unwrap().value))
        });
    }
    g.finish();
}

fn hedging(c: &mut Criterion) {
    let cfg = HedgingConfig { paths: 2000, ..HedgingConfig::default() };
    let mut g = c.benchmark_group("hedge_paths_n100");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_mode(mode, || hedge_paths(black_box(&cfg), 100).unwrap().len()))
        });
    }
    g.finish();
}

criterion_group!(benches, ball_solve, hedging);
criterion_main!(benches);
