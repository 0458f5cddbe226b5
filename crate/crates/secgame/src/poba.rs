//! Social optimum, Price of Behavioral Anarchy, and parameter sweeps.
//!
//! The social optimum pools every defender into one veridical planner:
//! alpha 1, the combined budget, and all assets merged (losses summed per
//! node). The Price of Behavioral Anarchy (PoBA) is the worst equilibrium's
//! total true cost divided by the planner's cost; it always lies in
//! `[1, e^B]` for total budget `B`, and both bounds are checked on every
//! evaluation.

use std::collections::HashMap;

use crate::equilibrium::{find_equilibria, DynamicsConfig, Equilibrium};
use crate::error::{Error, Result};
use crate::par::par_map;
use crate::perception::BehavioralLevel;
use crate::cost::InvestmentProfile;
use crate::scenario::Scenario;
use crate::solver::{solve, BestResponseProblem, SolverConfig};

/// Numerical slack on the lower PoBA bound check.
pub const POBA_LOWER_SLACK: f64 = 1e-9;
/// Numerical slack on the upper PoBA bound check.
pub const POBA_UPPER_SLACK: f64 = 1e-6;

/// The pooled planner's allocation (per-edge totals) and total true cost.
#[derive(Debug, Clone)]
pub struct SocialOptimum {
    pub investment: Vec<f64>,
    pub cost: f64,
}

/// Minimizes total true expected cost with the pooled budget: a single
/// best-response instance at alpha 1 over the merged assets.
pub fn social_optimum(scenario: &Scenario, solver: &SolverConfig) -> Result<SocialOptimum> {
    let mut merged: HashMap<usize, f64> = HashMap::new();
    for d in scenario.defenders() {
        for a in &d.assets {
            *merged.entry(a.node).or_insert(0.0) += a.loss;
        }
    }
    let mut nodes: Vec<usize> = merged.keys().copied().collect();
    nodes.sort_unstable();
    let mut paths = Vec::new();
    let mut losses = Vec::new();
    for node in nodes {
        let loss = merged[&node];
        let ps = scenario.pathset(node).expect("pathsets precomputed");
        if loss > 0.0 && !ps.paths.is_empty() {
            paths.push(ps.paths.clone());
            losses.push(loss);
        }
    }
    let problem = BestResponseProblem {
        paths,
        losses,
        base: scenario.model().offsets().to_vec(),
        budget: scenario.total_budget(),
        alpha: 1.0,
    };
    let br = solve(&problem, solver)?;
    Ok(SocialOptimum { investment: br.investment, cost: br.cost })
}

/// PoBA evaluation: every equilibrium found, the worst total true cost,
/// the planner's cost, their ratio, and the theoretical bound checks.
#[derive(Debug, Clone)]
pub struct PobaReport {
    pub equilibria: Vec<Equilibrium>,
    /// Total true cost per equilibrium, same order as `equilibria`.
    pub pne_costs: Vec<f64>,
    /// Worst (largest) equilibrium total true cost.
    pub worst_pne_cost: f64,
    pub social: SocialOptimum,
    pub poba: f64,
    /// `e^B` for the pooled budget `B`.
    pub upper_bound: f64,
    pub lower_bound_ok: bool,
    pub upper_bound_ok: bool,
}

/// Computes the PoBA of a scenario: equilibria via best-response dynamics
/// from the zero profile, `extra_starts`, and `restarts` randomized starts,
/// against the pooled planner's optimum.
pub fn poba(
    scenario: &Scenario,
    extra_starts: &[InvestmentProfile],
    restarts: usize,
    config: &DynamicsConfig,
) -> Result<PobaReport> {
    let equilibria = find_equilibria(scenario, extra_starts, restarts, config)?;
    let social = social_optimum(scenario, &config.solver)?;
    let pne_costs: Vec<f64> = equilibria.iter().map(|e| e.costs.total_true_cost).collect();
    let worst_pne_cost = pne_costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let poba = if social.cost > 0.0 {
        worst_pne_cost / social.cost
    } else if worst_pne_cost == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let upper_bound = scenario.total_budget().exp();
    let lower_bound_ok = poba >= 1.0 - POBA_LOWER_SLACK;
    let upper_bound_ok = poba <= upper_bound + POBA_UPPER_SLACK;
    if !lower_bound_ok || !upper_bound_ok {
        log::warn!("PoBA {poba} escapes its theoretical bounds [1, {upper_bound}]");
    }
    Ok(PobaReport {
        equilibria,
        pne_costs,
        worst_pne_cost,
        social,
        poba,
        upper_bound,
        lower_bound_ok,
        upper_bound_ok,
    })
}

/// Cartesian sweep grid. Cells are evaluated budget-major (all alphas for
/// the first budget, then the next budget).
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub budgets: Vec<f64>,
}

impl SweepGrid {
    /// Inclusive linear grid `start..=end` with `steps` points (one point
    /// when `steps` is 1 or the endpoints coincide).
    pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
        if steps <= 1 || start == end {
            return vec![start];
        }
        (0..steps)
            .map(|i| start + (end - start) * i as f64 / (steps - 1) as f64)
            .collect()
    }
}

/// One sweep cell, in the CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub budget: f64,
    pub pne_cost: f64,
    pub social_cost: f64,
    pub inefficiency: f64,
}

/// Evaluates the grid on derived copies of `template` (every defender's
/// alpha replaced, budgets rescaled to the cell's total). Rows present in
/// `cached` with bit-identical `(alpha, budget)` keys are reused instead of
/// recomputed, which lets an interrupted sweep resume from its own output.
pub fn sweep(
    template: &Scenario,
    grid: &SweepGrid,
    restarts: usize,
    config: &DynamicsConfig,
    cached: &[SweepRow],
) -> Result<Vec<SweepRow>> {
    let cache: HashMap<(u64, u64), &SweepRow> = cached
        .iter()
        .map(|r| ((r.alpha.to_bits(), r.budget.to_bits()), r))
        .collect();
    let mut cells = Vec::with_capacity(grid.alphas.len() * grid.budgets.len());
    for &budget in &grid.budgets {
        for &alpha in &grid.alphas {
            cells.push((alpha, budget));
        }
    }
    let cache_ref = &cache;
    let results = par_map(cells, move |(alpha, budget)| -> Result<SweepRow> {
        if let Some(row) = cache_ref.get(&(alpha.to_bits(), budget.to_bits())) {
            return Ok((*row).clone());
        }
        let level = BehavioralLevel::new(alpha)?;
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::Domain(format!("budget {budget} must be nonnegative")));
        }
        let cell = template.with_alpha_and_total_budget(level, budget);
        let report = poba(&cell, &[], restarts, config)?;
        Ok(SweepRow {
            alpha,
            budget,
            pne_cost: report.worst_pne_cost,
            social_cost: report.social.cost,
            inefficiency: report.poba,
        })
    });
    results.into_iter().collect()
}
