//! Helpers shared by the integration test suites.
#![allow(dead_code)] // not every suite uses every helper

use std::path::PathBuf;

use secgame::scenario::Scenario;
use secgame::solver::BestResponseProblem;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn load(name: &str) -> Scenario {
    secgame::io::load_scenario(&scenario_path(name)).expect("bundled scenario loads")
}

pub fn edge_ix(s: &Scenario, from: &str, to: &str) -> usize {
    let f = s.graph().node_id(from).unwrap();
    let t = s.graph().node_id(to).unwrap();
    s.graph()
        .edges()
        .iter()
        .find(|e| e.from == f && e.to == t)
        .unwrap_or_else(|| panic!("no edge ({from}, {to})"))
        .index
}

/// Exhaustive minimum of a best-response objective over a regular grid on
/// the budget simplex. Exponential in the edge count; callers keep the
/// instances tiny. Returns (best cost, best allocation).
pub fn grid_minimum(problem: &BestResponseProblem, steps: usize) -> (f64, Vec<f64>) {
    let n = problem.edge_count();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut alloc = vec![0usize; n];
    search(problem, steps, 0, steps, &mut alloc, &mut best);
    best
}

fn search(
    problem: &BestResponseProblem,
    steps: usize,
    pos: usize,
    left: usize,
    alloc: &mut Vec<usize>,
    best: &mut (f64, Vec<f64>),
) {
    if pos + 1 == alloc.len() {
        alloc[pos] = left;
        let y: Vec<f64> =
            alloc.iter().map(|k| problem.budget * *k as f64 / steps as f64).collect();
        let cost = problem.cost(&y);
        if cost < best.0 {
            *best = (cost, y);
        }
        return;
    }
    for k in 0..=left {
        alloc[pos] = k;
        search(problem, steps, pos + 1, left - k, alloc, best);
    }
}
