//! Solver benchmarks. Run `cargo bench` for the parallel build and
//! `cargo bench --no-default-features` for the sequential fallback; the
//! equilibrium-search and sweep benches are the ones that fan out across
//! threads.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};

use secgame::cost::InvestmentProfile;
use secgame::equilibrium::{find_equilibria, DynamicsConfig};
use secgame::poba::{sweep, SweepGrid};
use secgame::scenario::Scenario;
use secgame::solver::{best_response, SolverConfig};

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    secgame::io::load_scenario(&path).unwrap()
}

fn bench_best_response(c: &mut Criterion) {
    let s = scenario("split_join.json");
    let zero = InvestmentProfile::zeros(1, s.graph().edge_count());
    c.bench_function("best_response/split_join", |b| {
        b.iter(|| best_response(&s, 0, &zero, &SolverConfig::default()).unwrap())
    });
}

fn bench_equilibrium_search(c: &mut Criterion) {
    let s = scenario("multi_pne.json");
    let cfg = DynamicsConfig::default();
    let mut group = c.benchmark_group("find_equilibria");
    group.sample_size(10);
    group.bench_function("multi_pne/8_restarts", |b| {
        b.iter(|| find_equilibria(&s, &[], 8, &cfg).unwrap())
    });
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let s = scenario("split_join.json");
    let grid =
        SweepGrid { alphas: SweepGrid::linspace(0.3, 0.9, 4), budgets: vec![2.0, 4.0, 6.0] };
    let cfg = DynamicsConfig::default();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("split_join/4x3", |b| {
        b.iter(|| sweep(&s, &grid, 1, &cfg, &[]).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_best_response, bench_equilibrium_search, bench_sweep);
criterion_main!(benches);
