//! Single-defender best response: minimize the perceived expected cost
//! over the budget simplex.
//!
//! The objective `sum_m L_m exp(-min_P sum_{e in P} (y_e + c_e)^alpha)` is
//! convex in `y` but nonsmooth where critical paths tie. The solver runs
//! two phases:
//!
//! 1. annealed projected gradient on a log-sum-exp softened objective,
//!    with a smoothing temperature schedule ending at the exact objective;
//! 2. an active-set Newton polish on the KKT system of the equivalent
//!    epigraph program, which recovers tied-path corners to near machine
//!    precision. When the Newton system is singular (common at `alpha = 1`,
//!    where optima sit on low-dimensional faces the gradient phase already
//!    finds exactly) the phase-1 iterate is kept.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::InvestmentProfile;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Floor inside the gradient power term `(y + c)^(alpha - 1)`, which is
/// unbounded as `y + c -> 0` for `alpha < 1`.
const GRAD_FLOOR: f64 = 1e-9;

/// Knobs for the best-response solver. Defaults reproduce every reference
/// value in the test suite; `seed` only influences the interior starting
/// point, not the solution of this convex program.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Gradient iterations per smoothing stage.
    pub iters_per_stage: usize,
    /// Independent random restarts; the best candidate wins.
    pub restarts: usize,
    /// Base RNG seed for starting points.
    pub seed: u64,
    /// Run the active-set Newton polish after the gradient phase.
    pub polish: bool,
    /// Sup-norm radius within which restart solutions count as identical
    /// when probing uniqueness.
    pub uniqueness_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { iters_per_stage: 2000, restarts: 1, seed: 0, polish: true, uniqueness_tol: 1e-6 }
    }
}

/// A best-response instance for one defender: her assets' path sets, the
/// per-edge constants `c_e` (everyone else's investment plus the edge
/// offset), her budget and behavioral level.
///
/// Assets that are unreachable or carry zero loss contribute nothing to the
/// objective and are dropped at construction.
#[derive(Debug, Clone)]
pub struct BestResponseProblem {
    pub paths: Vec<Vec<Vec<usize>>>,
    pub losses: Vec<f64>,
    /// `c_e` per edge: other defenders' totals plus the offset `a_e`.
    pub base: Vec<f64>,
    pub budget: f64,
    pub alpha: f64,
}

impl BestResponseProblem {
    /// Builds the instance defender `k` faces when everyone else plays
    /// their rows of `profile`.
    pub fn from_scenario(scenario: &Scenario, k: usize, profile: &InvestmentProfile) -> Result<Self> {
        if k >= scenario.defenders().len() {
            return Err(Error::UnknownDefender(format!("index {k}")));
        }
        let others = profile.aggregate_excluding(k);
        let offsets = scenario.model().offsets();
        let base = others.iter().zip(offsets).map(|(o, a)| o + a).collect();
        let d = &scenario.defenders()[k];
        let mut paths = Vec::new();
        let mut losses = Vec::new();
        for a in &d.assets {
            let ps = scenario.pathset(a.node).expect("pathsets precomputed");
            if a.loss > 0.0 && !ps.paths.is_empty() {
                paths.push(ps.paths.clone());
                losses.push(a.loss);
            }
        }
        Ok(Self { paths, losses, base, budget: d.budget, alpha: d.alpha.alpha() })
    }

    pub fn edge_count(&self) -> usize {
        self.base.len()
    }

    fn path_exponent(&self, path: &[usize], y: &[f64]) -> f64 {
        path.iter()
            .map(|&e| {
                let t = y[e] + self.base[e];
                if self.alpha == 1.0 {
                    t
                } else {
                    t.powf(self.alpha)
                }
            })
            .sum()
    }

    /// Exact perceived cost of an allocation.
    pub fn cost(&self, y: &[f64]) -> f64 {
        self.losses
            .iter()
            .zip(&self.paths)
            .map(|(loss, paths)| {
                let hmin = paths
                    .iter()
                    .map(|p| self.path_exponent(p, y))
                    .fold(f64::INFINITY, f64::min);
                loss * (-hmin).exp()
            })
            .sum()
    }

    /// Smoothed objective and gradient. For `tau > 0` each asset's max
    /// vulnerability is softened by a log-sum-exp over its paths; `tau = 0`
    /// evaluates the exact objective with a uniform subgradient over tied
    /// critical paths.
    pub fn smoothed_cost_grad(&self, y: &[f64], tau: f64) -> (f64, Vec<f64>) {
        let n = self.edge_count();
        let mut g = vec![0.0; n];
        let mut total = 0.0;
        for (loss, paths) in self.losses.iter().zip(&self.paths) {
            let hs: Vec<f64> = paths.iter().map(|p| self.path_exponent(p, y)).collect();
            let hmin = hs.iter().copied().fold(f64::INFINITY, f64::min);
            let (weights, h_smooth) = if tau > 0.0 {
                let raw: Vec<f64> = hs.iter().map(|h| (-(h - hmin) / tau).exp()).collect();
                let z: f64 = raw.iter().sum();
                (raw.iter().map(|w| w / z).collect::<Vec<_>>(), hmin - tau * z.ln())
            } else {
                let active: Vec<bool> =
                    hs.iter().map(|h| *h <= hmin * (1.0 + 1e-9) + 1e-12).collect();
                let count = active.iter().filter(|a| **a).count() as f64;
                (
                    active.iter().map(|a| if *a { 1.0 / count } else { 0.0 }).collect(),
                    hmin,
                )
            };
            let f_m = loss * (-h_smooth).exp();
            total += f_m;
            for (w, path) in weights.iter().zip(paths) {
                if *w == 0.0 {
                    continue;
                }
                for &e in path {
                    let t = (y[e] + self.base[e]).max(GRAD_FLOOR);
                    g[e] += -f_m * w * self.alpha * t.powf(self.alpha - 1.0);
                }
            }
        }
        (total, g)
    }
}

/// Result of one best-response solve.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub investment: Vec<f64>,
    /// Perceived expected cost at the returned allocation.
    pub cost: f64,
    /// Whether the Newton polish converged (false means the gradient-phase
    /// iterate was kept).
    pub polished: bool,
}

/// Euclidean projection onto `{y >= 0, sum y = budget}` (sort-based,
/// O(n log n)).
pub fn project_budget_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = u[0] - budget;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        if ui * (i as f64 + 1.0) > css - budget {
            theta = (css - budget) / (i as f64 + 1.0);
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Phase 1: annealed smoothed projected gradient with backtracking.
fn gradient_phase(problem: &BestResponseProblem, mut y: Vec<f64>, iters: usize) -> Vec<f64> {
    let b = problem.budget;
    let scale = b.max(1.0);
    let taus = [0.3, 0.1, 0.03, 1e-2, 1e-3, 1e-4, 1e-6, 0.0];
    for tau_rel in taus {
        let tau = tau_rel * scale;
        let mut step = 1.0;
        let (mut f, mut g) = problem.smoothed_cost_grad(&y, tau);
        for it in 0..iters {
            let (ynew, fnew, gnew) = loop {
                let trial: Vec<f64> =
                    y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
                let cand = project_budget_simplex(&trial, b);
                let (fc, gc) = problem.smoothed_cost_grad(&cand, tau);
                let dist2: f64 = y.iter().zip(&cand).map(|(a, c)| (a - c) * (a - c)).sum();
                if fc <= f - 1e-4 / step * dist2 || step < 1e-18 {
                    break (cand, fc, gc);
                }
                step *= 0.5;
            };
            let moved = sup_dist(&y, &ynew);
            y = ynew;
            f = fnew;
            g = gnew;
            if moved < 1e-14 && it > 5 {
                break;
            }
            step *= 1.3;
        }
    }
    y
}

/// Phase 2: active-set Newton polish on the KKT system of
/// `min sum_m L_m exp(-t_m)  s.t.  h_P(y) = t_m (P active), sum y_S = B`.
/// Returns `None` when no widening of the active set yields a KKT point
/// with nonnegative multipliers and no violated inactive path.
fn newton_polish(problem: &BestResponseProblem, y_in: &[f64]) -> Option<Vec<f64>> {
    let n = problem.edge_count();
    let n_assets = problem.losses.len();
    let b_scale = problem.budget.max(1.0);
    let mut y = y_in.to_vec();
    let mut act_tol = 1e-2;
    for _outer in 0..20 {
        let mut active: Vec<Vec<usize>> = Vec::with_capacity(n_assets);
        let mut t0 = Vec::with_capacity(n_assets);
        for paths in &problem.paths {
            let hs: Vec<f64> = paths.iter().map(|p| problem.path_exponent(p, &y)).collect();
            let hmin = hs.iter().copied().fold(f64::INFINITY, f64::min);
            t0.push(hmin);
            active.push(
                hs.iter()
                    .enumerate()
                    .filter(|(_, h)| **h <= hmin + act_tol * hmin.abs().max(1.0))
                    .map(|(i, _)| i)
                    .collect(),
            );
        }
        let mut in_support = vec![false; n];
        for (e, flag) in in_support.iter_mut().enumerate() {
            *flag = y[e] > 1e-7;
        }
        if problem.alpha < 1.0 {
            // edges with zero base on active paths have unbounded marginal
            // return at zero, so they belong in the support
            for (paths, acts) in problem.paths.iter().zip(&active) {
                for &pi in acts {
                    for &e in &paths[pi] {
                        if problem.base[e] < 1e-12 {
                            in_support[e] = true;
                        }
                    }
                }
            }
        }
        let support: Vec<usize> = (0..n).filter(|e| in_support[*e]).collect();
        let s = support.len();
        let n_active: usize = active.iter().map(Vec::len).sum();
        let dim = s + n_assets + n_active + 1;

        // z = [y_S, t_m, mu_{m,P}, lambda]
        let mut z = DVector::zeros(dim);
        for (i, &e) in support.iter().enumerate() {
            z[i] = y[e];
        }
        for m in 0..n_assets {
            z[s + m] = t0[m];
        }
        let mut off = s + n_assets;
        for (m, acts) in active.iter().enumerate() {
            let mu0 = problem.losses[m] * (-t0[m]).exp() / acts.len() as f64;
            for _ in acts {
                z[off] = mu0;
                off += 1;
            }
        }
        z[dim - 1] = 1.0;

        let resid = |z: &DVector<f64>| -> DVector<f64> {
            let mut yy = y.clone();
            for (i, &e) in support.iter().enumerate() {
                yy[e] = z[i];
            }
            let lam = z[dim - 1];
            let mut out = DVector::zeros(dim);
            let mut row = 0;
            let mut off = s + n_assets;
            let mut mu_ix: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_assets];
            for (m, acts) in active.iter().enumerate() {
                let mu_sum: f64 = (0..acts.len()).map(|j| z[off + j]).sum();
                out[row] = -problem.losses[m] * (-z[s + m]).exp() + mu_sum;
                row += 1;
                for (j, &pi) in acts.iter().enumerate() {
                    mu_ix[m].push((pi, off + j));
                }
                off += acts.len();
            }
            for &e in &support {
                let mut grad = 0.0;
                for (m, pairs) in mu_ix.iter().enumerate() {
                    for &(pi, zi) in pairs {
                        if problem.paths[m][pi].contains(&e) {
                            let t = (yy[e] + problem.base[e]).max(GRAD_FLOOR);
                            grad += z[zi] * problem.alpha * t.powf(problem.alpha - 1.0);
                        }
                    }
                }
                out[row] = grad - lam;
                row += 1;
            }
            for (m, acts) in active.iter().enumerate() {
                for &pi in acts {
                    out[row] = problem.path_exponent(&problem.paths[m][pi], &yy) - z[s + m];
                    row += 1;
                }
            }
            out[row] = support.iter().map(|&e| yy[e]).sum::<f64>() - problem.budget;
            out
        };

        let mut solved = false;
        for _ in 0..80 {
            let f = resid(&z);
            if f.amax() < 1e-13 * b_scale {
                solved = true;
                break;
            }
            let mut jac = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                let dz = 1e-7 * z[j].abs().max(1.0);
                let mut zp = z.clone();
                zp[j] += dz;
                let fp = resid(&zp);
                for i in 0..dim {
                    jac[(i, j)] = (fp[i] - f[i]) / dz;
                }
            }
            let neg_f = -f;
            let step = match jac.clone().lu().solve(&neg_f) {
                Some(st) => st,
                None => match jac.svd(true, true).solve(&neg_f, 1e-12) {
                    Ok(st) => st,
                    Err(_) => return None,
                },
            };
            // keep support investments strictly positive (0.9 fraction to
            // the boundary)
            let mut a_max = 1.0f64;
            for i in 0..s {
                if step[i] < 0.0 {
                    a_max = a_max.min(-0.9 * z[i] / step[i]);
                }
            }
            z += a_max * step;
        }

        let final_res = resid(&z).amax();
        let mu_ok = (s + n_assets..dim - 1).all(|i| z[i] >= -1e-9);
        let y_ok = (0..s).all(|i| z[i] >= -1e-12);
        let mut ynew = vec![0.0; n];
        for (i, &e) in support.iter().enumerate() {
            ynew[e] = z[i].max(0.0);
        }
        let mut violated = false;
        for (m, paths) in problem.paths.iter().enumerate() {
            let hmin = paths
                .iter()
                .map(|p| problem.path_exponent(p, &ynew))
                .fold(f64::INFINITY, f64::min);
            if hmin < z[s + m] - 1e-9 {
                violated = true;
            }
        }
        if solved && final_res < 1e-10 * b_scale && mu_ok && y_ok && !violated {
            return Some(ynew);
        }
        act_tol *= 3.0;
        if !violated {
            y = ynew;
        }
    }
    None
}

/// Solves one best-response instance.
pub fn solve(problem: &BestResponseProblem, config: &SolverConfig) -> Result<BestResponse> {
    let n = problem.edge_count();
    if problem.budget < 0.0 {
        return Err(Error::Infeasible(format!("budget {}", problem.budget)));
    }
    if problem.losses.is_empty() || problem.budget == 0.0 {
        // no objective to trade off: spend the budget uniformly
        let investment = project_budget_simplex(&vec![0.0; n], problem.budget);
        let cost = problem.cost(&investment);
        return Ok(BestResponse { investment, cost, polished: true });
    }
    let mut best: Option<BestResponse> = None;
    for r in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        let start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * problem.budget).collect();
        let y0 = project_budget_simplex(&start, problem.budget);
        let y = gradient_phase(problem, y0, config.iters_per_stage);
        let mut candidate = BestResponse { cost: problem.cost(&y), investment: y, polished: false };
        if config.polish {
            if let Some(yp) = newton_polish(problem, &candidate.investment) {
                let yp = project_budget_simplex(&yp, problem.budget);
                let cp = problem.cost(&yp);
                if cp <= candidate.cost + 1e-12 * candidate.cost.abs().max(1.0) {
                    candidate = BestResponse { investment: yp, cost: cp, polished: true };
                }
            }
        }
        match &best {
            Some(b) if b.cost <= candidate.cost => {}
            _ => best = Some(candidate),
        }
    }
    best.ok_or_else(|| Error::NonConvergence("no candidate produced".into()))
}

/// Best response of defender `k` against the other rows of `profile`.
pub fn best_response(
    scenario: &Scenario,
    k: usize,
    profile: &InvestmentProfile,
    config: &SolverConfig,
) -> Result<BestResponse> {
    let problem = BestResponseProblem::from_scenario(scenario, k, profile)?;
    solve(&problem, config)
}

/// Solves the instance from `samples` independent starts and reports
/// whether all near-optimal solutions agree within `config.uniqueness_tol`
/// (a heuristic certificate that the best response is unique).
pub fn check_uniqueness(
    problem: &BestResponseProblem,
    config: &SolverConfig,
    samples: usize,
) -> Result<(BestResponse, bool)> {
    let mut runs = Vec::with_capacity(samples.max(1));
    for r in 0..samples.max(1) {
        let cfg = SolverConfig { seed: config.seed.wrapping_add(1000 * r as u64), restarts: 1, ..config.clone() };
        runs.push(solve(problem, &cfg)?);
    }
    let best_ix = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.partial_cmp(&b.1.cost).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let best = runs[best_ix].clone();
    let cost_tol = 1e-8 * best.cost.abs().max(1e-12);
    let unique = runs.iter().all(|r| {
        r.cost > best.cost + cost_tol
            || sup_dist(&r.investment, &best.investment) <= config.uniqueness_tol
    });
    Ok((best, unique))
}
