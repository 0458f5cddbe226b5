//! Pure Nash equilibria via best-response dynamics: iterate exact best
//! responses until the joint profile stops moving, then verify that no
//! defender can improve by more than a relative tolerance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{evaluate, CostBreakdown, InvestmentProfile};
use crate::error::{Error, Result};
use crate::par::par_map;
use crate::scenario::Scenario;
use crate::solver::{
    best_response, project_budget_simplex, solve, BestResponseProblem, SolverConfig,
};

/// Relative improvement below which a defender is considered to have no
/// profitable deviation. Some games have connected sets of equilibria
/// along which best-response dynamics keep improving by a few 1e-6 per
/// round for thousands of rounds; 1e-5 accepts any point of such a set.
pub const DEFAULT_PNE_TOL: f64 = 1e-5;

/// Sup-norm radius within which two equilibrium profiles count as the same
/// equilibrium.
pub const EQUILIBRIUM_DEDUP_TOL: f64 = 1e-4;

/// Order in which defenders update inside one round of dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    RoundRobin,
    Random,
}

#[derive(Debug, Clone)]
pub struct DynamicsConfig {
    pub max_rounds: usize,
    /// Sup-norm movement per round below which dynamics have converged.
    pub profile_tol: f64,
    /// Alternative stop: a round in which no defender improved her
    /// perceived cost by more than this relative amount also counts as
    /// converged. This catches games with a continuum of equilibria, where
    /// the profile can drift along the equilibrium set forever while every
    /// defender is already best-responding.
    pub improvement_tol: f64,
    pub order: UpdateOrder,
    /// Rotation of the round-robin order: defender `order_offset` moves
    /// first. A seeded starting profile survives the first round only if
    /// its owner moves late, so equilibrium search tries every rotation.
    pub order_offset: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            max_rounds: 200,
            profile_tol: 1e-6,
            improvement_tol: 5e-6,
            order: UpdateOrder::RoundRobin,
            order_offset: 0,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

/// Outcome of one run of best-response dynamics.
#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub profile: InvestmentProfile,
    pub rounds: usize,
    pub converged: bool,
}

/// Runs best-response dynamics from `initial` until the profile moves less
/// than `profile_tol` in sup norm over a full round, or `max_rounds` is
/// exhausted.
pub fn best_response_dynamics(
    scenario: &Scenario,
    initial: &InvestmentProfile,
    config: &DynamicsConfig,
) -> Result<DynamicsResult> {
    initial.check_feasible(scenario)?;
    let k = scenario.defenders().len();
    let mut profile = initial.clone();
    let mut order: Vec<usize> = (0..k).collect();
    if k > 0 {
        order.rotate_left(config.order_offset % k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for round in 1..=config.max_rounds {
        if config.order == UpdateOrder::Random {
            order.shuffle(&mut rng);
        }
        let before = profile.clone();
        let mut worst_improvement = 0.0f64;
        for &i in &order {
            let solver = SolverConfig {
                seed: config.solver.seed.wrapping_add(i as u64),
                ..config.solver.clone()
            };
            let problem = BestResponseProblem::from_scenario(scenario, i, &profile)?;
            let current = problem.cost(profile.row(i));
            let br = solve(&problem, &solver)?;
            worst_improvement =
                worst_improvement.max((current - br.cost) / current.abs().max(1e-300));
            profile.set_row(i, &br.investment);
        }
        if profile.sup_distance(&before) < config.profile_tol
            || worst_improvement <= config.improvement_tol
        {
            return Ok(DynamicsResult { profile, rounds: round, converged: true });
        }
    }
    Ok(DynamicsResult { profile, rounds: config.max_rounds, converged: false })
}

/// Result of checking a profile for equilibrium: the worst relative
/// improvement any defender could realize by deviating to her exact best
/// response.
#[derive(Debug, Clone)]
pub struct PneCheck {
    pub is_equilibrium: bool,
    pub worst_relative_improvement: f64,
}

/// Verifies a candidate equilibrium: every defender's current perceived
/// cost must be within relative `tol` of her best-response cost.
pub fn verify_pne(
    scenario: &Scenario,
    profile: &InvestmentProfile,
    tol: f64,
    solver: &SolverConfig,
) -> Result<PneCheck> {
    let breakdown = evaluate(scenario, profile)?;
    let mut worst = 0.0f64;
    for k in 0..scenario.defenders().len() {
        let solver = SolverConfig { seed: solver.seed.wrapping_add(k as u64), ..solver.clone() };
        let br = best_response(scenario, k, profile, &solver)?;
        let current = breakdown.perceived_costs[k];
        let rel = (current - br.cost) / current.abs().max(1e-300);
        worst = worst.max(rel);
    }
    Ok(PneCheck { is_equilibrium: worst <= tol, worst_relative_improvement: worst })
}

/// A verified pure Nash equilibrium together with its cost evaluation.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub profile: InvestmentProfile,
    pub costs: CostBreakdown,
    pub rounds: usize,
}

/// Searches for pure Nash equilibria by running dynamics from several
/// starting profiles in parallel: the zero profile, every profile in
/// `extra_starts`, and `restarts` randomized ones (alternating Dirichlet
/// interior points with vertex profiles that dump each budget on a single
/// edge). Converged runs are verified and deduplicated by sup norm.
///
/// Errors with [`Error::NoEquilibria`] when no run both converges and
/// verifies.
pub fn find_equilibria(
    scenario: &Scenario,
    extra_starts: &[InvestmentProfile],
    restarts: usize,
    config: &DynamicsConfig,
) -> Result<Vec<Equilibrium>> {
    let k = scenario.defenders().len();
    let n = scenario.graph().edge_count();
    let mut jobs: Vec<(InvestmentProfile, usize)> =
        vec![(InvestmentProfile::zeros(k, n), 0)];
    // a seeded profile only matters if its owner is not the first mover,
    // so try every round-robin rotation of the user-provided starts
    for start in extra_starts {
        for offset in 0..k.max(1) {
            jobs.push((start.clone(), offset));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    for r in 0..restarts {
        let mut p = InvestmentProfile::zeros(k, n);
        for (i, d) in scenario.defenders().iter().enumerate() {
            let row = if r % 2 == 0 {
                // interior start: exponential draws normalized to the budget
                let draws: Vec<f64> =
                    (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = draws.iter().sum();
                draws.iter().map(|x| d.budget * x / total.max(1e-300)).collect()
            } else {
                // vertex start: the whole budget on one random edge
                let mut row = vec![0.0; n];
                row[rng.gen_range(0..n)] = d.budget;
                row
            };
            p.set_row(i, &project_budget_simplex(&row, d.budget));
        }
        jobs.push((p, r % k.max(1)));
    }

    let scenario_ref = scenario;
    let config_ref = config;
    let runs = par_map(jobs, move |(start, offset)| {
        let cfg = DynamicsConfig { order_offset: offset, ..config_ref.clone() };
        best_response_dynamics(scenario_ref, &start, &cfg)
    });

    let mut equilibria: Vec<Equilibrium> = Vec::new();
    let mut failures = Vec::new();
    for run in runs {
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                failures.push(e.to_string());
                continue;
            }
        };
        if !run.converged {
            failures.push(format!("dynamics hit the round limit ({})", run.rounds));
            continue;
        }
        let check = verify_pne(scenario_ref, &run.profile, DEFAULT_PNE_TOL, &config.solver)?;
        if !check.is_equilibrium {
            failures.push(format!(
                "converged profile failed verification (relative improvement {:.3e})",
                check.worst_relative_improvement
            ));
            continue;
        }
        if equilibria
            .iter()
            .all(|e| e.profile.sup_distance(&run.profile) > EQUILIBRIUM_DEDUP_TOL)
        {
            let costs = evaluate(scenario_ref, &run.profile)?;
            equilibria.push(Equilibrium { profile: run.profile, costs, rounds: run.rounds });
        }
    }
    if equilibria.is_empty() {
        return Err(Error::NoEquilibria(failures.join("; ")));
    }
    Ok(equilibria)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::tests::multi_pne_spec;
    use approx::assert_relative_eq;

    fn scenario() -> Scenario {
        Scenario::from_spec(&multi_pne_spec()).unwrap()
    }

    fn edge_ix(s: &Scenario, from: &str, to: &str) -> usize {
        let f = s.graph().node_id(from).unwrap();
        let t = s.graph().node_id(to).unwrap();
        s.graph().edges().iter().find(|e| e.from == f && e.to == t).unwrap().index
    }

    #[test]
    fn dynamics_from_zero_reach_the_uniform_equilibrium() {
        let s = scenario();
        let start = InvestmentProfile::zeros(2, s.graph().edge_count());
        let run = best_response_dynamics(&s, &start, &DynamicsConfig::default()).unwrap();
        assert!(run.converged);
        let check = verify_pne(&s, &run.profile, DEFAULT_PNE_TOL, &SolverConfig::default()).unwrap();
        assert!(check.is_equilibrium, "improvement {}", check.worst_relative_improvement);
        let costs = evaluate(&s, &run.profile).unwrap();
        assert_relative_eq!(costs.true_costs[0], (-8.0f64).exp(), max_relative = 1e-5);
        assert_relative_eq!(costs.true_costs[1], (-12.0f64).exp(), max_relative = 1e-4);
        for (a, b) in [("n1", "n2"), ("n1", "n4"), ("n2", "n5"), ("n4", "n5")] {
            assert_relative_eq!(run.profile.row(0)[edge_ix(&s, a, b)], 4.0, max_relative = 1e-4);
        }
    }

    #[test]
    fn biased_start_reaches_the_second_equilibrium() {
        let s = scenario();
        let mut start = InvestmentProfile::zeros(2, s.graph().edge_count());
        let mut r1 = vec![0.0; s.graph().edge_count()];
        r1[edge_ix(&s, "n1", "n2")] = 1.0;
        for (a, b) in [("n1", "n4"), ("n2", "n5"), ("n4", "n5")] {
            r1[edge_ix(&s, a, b)] = 5.0;
        }
        start.set_row(0, &r1);
        // D2 moves first so D1's seeded allocation survives the first round
        let cfg = DynamicsConfig { order_offset: 1, ..Default::default() };
        let run = best_response_dynamics(&s, &start, &cfg).unwrap();
        assert!(run.converged);
        let check = verify_pne(&s, &run.profile, DEFAULT_PNE_TOL, &SolverConfig::default()).unwrap();
        assert!(check.is_equilibrium);
        let costs = evaluate(&s, &run.profile).unwrap();
        assert_relative_eq!(costs.perceived_costs[0], (-2.0 * 5.0f64.sqrt()).exp(), max_relative = 1e-4);
    }

    #[test]
    fn find_equilibria_discovers_both() {
        let s = scenario();
        let mut biased = InvestmentProfile::zeros(2, s.graph().edge_count());
        let mut r1 = vec![0.0; s.graph().edge_count()];
        r1[edge_ix(&s, "n1", "n2")] = 1.0;
        for (a, b) in [("n1", "n4"), ("n2", "n5"), ("n4", "n5")] {
            r1[edge_ix(&s, a, b)] = 5.0;
        }
        biased.set_row(0, &r1);
        let eqs = find_equilibria(&s, &[biased], 2, &DynamicsConfig::default()).unwrap();
        assert!(eqs.len() >= 2, "found {} equilibria", eqs.len());
    }

    #[test]
    fn non_equilibrium_profile_fails_verification() {
        let s = scenario();
        let profile = InvestmentProfile::zeros(2, s.graph().edge_count());
        let check = verify_pne(&s, &profile, DEFAULT_PNE_TOL, &SolverConfig::default()).unwrap();
        assert!(!check.is_equilibrium);
        assert!(check.worst_relative_improvement > 0.9);
    }

    #[test]
    fn random_order_converges_too() {
        let s = scenario();
        let start = InvestmentProfile::zeros(2, s.graph().edge_count());
        let cfg = DynamicsConfig { order: UpdateOrder::Random, seed: 42, ..Default::default() };
        let run = best_response_dynamics(&s, &start, &cfg).unwrap();
        assert!(run.converged);
        let check = verify_pne(&s, &run.profile, DEFAULT_PNE_TOL, &SolverConfig::default()).unwrap();
        assert!(check.is_equilibrium);
    }
}
