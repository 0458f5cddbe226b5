//! True and perceived expected-cost evaluation for joint investment
//! profiles, including per-asset vulnerabilities and critical paths.
//!
//! Everything is computed in log space per path and exponentiated last, so
//! sweeps with large budgets do not underflow mid-computation.

use crate::error::{Error, Result};
use crate::perception::{clamp_probability, BehavioralLevel};
use crate::scenario::Scenario;

/// Relative tolerance within which paths are considered tied for the
/// per-asset maximum; all maximizers within it are reported as critical.
pub const CRITICAL_TIE_TOL: f64 = 1e-9;

/// Slack allowed on budget feasibility checks, absorbing projection and
/// solver round-off.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Per-defender, per-edge nonnegative investments, stored row-major
/// (one row per defender).
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentProfile {
    data: Vec<f64>,
    defenders: usize,
    edges: usize,
}

impl InvestmentProfile {
    pub fn zeros(defenders: usize, edges: usize) -> Self {
        Self { data: vec![0.0; defenders * edges], defenders, edges }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let defenders = rows.len();
        let edges = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != edges) {
            return Err(Error::Infeasible("ragged investment rows".into()));
        }
        Ok(Self { data: rows.into_iter().flatten().collect(), defenders, edges })
    }

    pub fn defender_count(&self) -> usize {
        self.defenders
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.edges..(k + 1) * self.edges]
    }

    pub fn set_row(&mut self, k: usize, row: &[f64]) {
        assert_eq!(row.len(), self.edges);
        self.data[k * self.edges..(k + 1) * self.edges].copy_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.edges)
    }

    /// Per-edge totals across defenders: `x_e = sum_k x^k_e`.
    pub fn aggregate(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.edges];
        for row in self.rows() {
            for (t, x) in totals.iter_mut().zip(row) {
                *t += x;
            }
        }
        totals
    }

    /// Per-edge totals excluding defender `k`'s row.
    pub fn aggregate_excluding(&self, k: usize) -> Vec<f64> {
        let mut totals = self.aggregate();
        for (t, x) in totals.iter_mut().zip(self.row(k)) {
            *t -= x;
        }
        totals
    }

    /// Sup-norm distance between two profiles.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks nonnegativity and per-defender budget feasibility against the
    /// scenario (row sums within [`FEASIBILITY_SLACK`] of the budgets).
    pub fn check_feasible(&self, scenario: &Scenario) -> Result<()> {
        if self.defenders != scenario.defenders().len() || self.edges != scenario.graph().edge_count() {
            return Err(Error::Infeasible(format!(
                "profile shape {}x{} does not match scenario {}x{}",
                self.defenders,
                self.edges,
                scenario.defenders().len(),
                scenario.graph().edge_count()
            )));
        }
        for (k, d) in scenario.defenders().iter().enumerate() {
            let row = self.row(k);
            if let Some(x) = row.iter().find(|x| **x < 0.0 || !x.is_finite()) {
                return Err(Error::Infeasible(format!("defender {}: investment {x}", d.id)));
            }
            let spent: f64 = row.iter().sum();
            if spent > d.budget + FEASIBILITY_SLACK {
                return Err(Error::Infeasible(format!(
                    "defender {}: spends {spent} over budget {}",
                    d.id, d.budget
                )));
            }
        }
        Ok(())
    }
}

/// Which probabilities a vulnerability evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perception {
    /// Raw probabilities (the true expected cost).
    True,
    /// Prelec-weighted probabilities at the given level.
    Perceived(BehavioralLevel),
}

/// Minus-log vulnerability of one asset: the smallest path exponent over
/// the asset's path set, plus the indices of all paths attaining it within
/// [`CRITICAL_TIE_TOL`]. `None` when the asset is unreachable.
pub fn vulnerability_exponent(
    paths: &[Vec<usize>],
    totals: &[f64],
    offsets: &[f64],
    mode: Perception,
) -> Option<(f64, Vec<usize>)> {
    if paths.is_empty() {
        return None;
    }
    let alpha = match mode {
        Perception::True => 1.0,
        Perception::Perceived(a) => a.alpha(),
    };
    let exponents: Vec<f64> = paths
        .iter()
        .map(|p| {
            p.iter()
                .map(|&e| {
                    let t = totals[e] + offsets[e];
                    if alpha == 1.0 {
                        t
                    } else {
                        t.powf(alpha)
                    }
                })
                .sum()
        })
        .collect();
    let min = exponents.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = CRITICAL_TIE_TOL * min.abs().max(1.0);
    let critical = exponents
        .iter()
        .enumerate()
        .filter(|(_, h)| **h <= min + tol)
        .map(|(i, _)| i)
        .collect();
    Some((min, critical))
}

/// Vulnerability of one asset as a probability in [0,1], with the critical
/// path indices. Unreachable assets have vulnerability 0 and no critical
/// paths. The empty path (target = source) yields vulnerability 1.
pub fn vulnerability(
    paths: &[Vec<usize>],
    totals: &[f64],
    offsets: &[f64],
    mode: Perception,
) -> (f64, Vec<usize>) {
    match vulnerability_exponent(paths, totals, offsets, mode) {
        Some((h, critical)) => (clamp_probability((-h).exp()), critical),
        None => (0.0, Vec::new()),
    }
}

/// One asset's entry in a [`CostBreakdown`].
#[derive(Debug, Clone)]
pub struct AssetCost {
    pub node: usize,
    pub loss: f64,
    pub true_vulnerability: f64,
    pub perceived_vulnerability: f64,
    /// Indices into the asset's path set attaining the true maximum.
    pub critical_paths_true: Vec<usize>,
    /// Indices attaining the perceived maximum.
    pub critical_paths_perceived: Vec<usize>,
}

/// Cost evaluation of a full joint profile: per-asset vulnerabilities and
/// per-defender true/perceived expected costs.
#[derive(Debug, Clone)]
pub struct CostBreakdown {
    /// Outer index: defender; inner: that defender's assets in order.
    pub assets: Vec<Vec<AssetCost>>,
    /// True expected cost per defender.
    pub true_costs: Vec<f64>,
    /// Perceived expected cost per defender (each with her own alpha).
    pub perceived_costs: Vec<f64>,
    /// Sum of true costs over all defenders.
    pub total_true_cost: f64,
}

/// Evaluates true and perceived costs for every defender under the joint
/// profile. Perceived costs use each defender's own alpha on every edge.
pub fn evaluate(scenario: &Scenario, profile: &InvestmentProfile) -> Result<CostBreakdown> {
    profile.check_feasible(scenario)?;
    let totals = profile.aggregate();
    let offsets = scenario.model().offsets();
    let mut assets = Vec::with_capacity(scenario.defenders().len());
    let mut true_costs = Vec::with_capacity(scenario.defenders().len());
    let mut perceived_costs = Vec::with_capacity(scenario.defenders().len());
    for d in scenario.defenders() {
        let mut rows = Vec::with_capacity(d.assets.len());
        let mut c_true = 0.0;
        let mut c_perc = 0.0;
        for a in &d.assets {
            let ps = scenario
                .pathset(a.node)
                .expect("scenario precomputes pathsets for all assets");
            ps.require_exhaustive(scenario.graph(), scenario.path_cap())?;
            let (vt, ct) = vulnerability(&ps.paths, &totals, offsets, Perception::True);
            let (vp, cp) = vulnerability(&ps.paths, &totals, offsets, Perception::Perceived(d.alpha));
            c_true += a.loss * vt;
            c_perc += a.loss * vp;
            rows.push(AssetCost {
                node: a.node,
                loss: a.loss,
                true_vulnerability: vt,
                perceived_vulnerability: vp,
                critical_paths_true: ct,
                critical_paths_perceived: cp,
            });
        }
        assets.push(rows);
        true_costs.push(c_true);
        perceived_costs.push(c_perc);
    }
    let total_true_cost = true_costs.iter().sum();
    Ok(CostBreakdown { assets, true_costs, perceived_costs, total_true_cost })
}

/// True expected cost breakdown (Perceived columns are filled too; they
/// come for free from the same pass).
pub fn true_cost(scenario: &Scenario, profile: &InvestmentProfile) -> Result<CostBreakdown> {
    evaluate(scenario, profile)
}

/// Perceived expected cost of one defender under the joint profile.
pub fn perceived_cost(scenario: &Scenario, defender: usize, profile: &InvestmentProfile) -> Result<f64> {
    Ok(evaluate(scenario, profile)?.perceived_costs[defender])
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scenario::ScenarioSpec;
    use approx::assert_relative_eq;

    /// Two-defender game on the six-node graph with two parallel branches
    /// (nodes n1..n6, source n1; D1 defends n5, D2 defends n6).
    pub fn multi_pne_spec() -> ScenarioSpec {
        ScenarioSpec {
            nodes: (1..=6).map(|i| format!("n{i}")).collect(),
            source: "n1".into(),
            edges: [
                ("n1", "n2"),
                ("n2", "n3"),
                ("n1", "n4"),
                ("n2", "n5"),
                ("n3", "n6"),
                ("n4", "n5"),
                ("n5", "n6"),
            ]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string(), 1.0))
            .collect(),
            defenders: vec![
                ("D1".into(), 16.0, 0.5, vec![("n5".into(), 1.0)]),
                ("D2".into(), 12.0, 0.5, vec![("n6".into(), 1.0)]),
            ],
        }
    }

    fn edge_ix(s: &Scenario, from: &str, to: &str) -> usize {
        let f = s.graph().node_id(from).unwrap();
        let t = s.graph().node_id(to).unwrap();
        s.graph().edges().iter().find(|e| e.from == f && e.to == t).unwrap().index
    }

    #[test]
    fn aggregate_sums_defender_rows() {
        let p = InvestmentProfile::from_rows(vec![vec![4.0, 0.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(p.aggregate(), vec![8.0, 1.0]);
        assert_eq!(p.aggregate_excluding(0), vec![4.0, 1.0]);
        let z = InvestmentProfile::zeros(2, 2);
        assert_eq!(z.aggregate(), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_investment_unit_p0_gives_vulnerability_one() {
        let s = Scenario::from_spec(&multi_pne_spec()).unwrap();
        let n6 = s.graph().node_id("n6").unwrap();
        let ps = s.pathset(n6).unwrap();
        let totals = vec![0.0; s.graph().edge_count()];
        let (v, critical) = vulnerability(&ps.paths, &totals, s.model().offsets(), Perception::True);
        assert_eq!(v, 1.0);
        assert_eq!(critical.len(), ps.paths.len());
    }

    #[test]
    fn unreachable_asset_has_zero_vulnerability() {
        let (v, c) = vulnerability(&[], &[], &[], Perception::True);
        assert_eq!(v, 0.0);
        assert!(c.is_empty());
    }

    /// Costs at the first known equilibrium of the two-defender example:
    /// D1 uniform 4 on her four edges, D2 uniform 4 on her three edges.
    #[test]
    fn multi_pne_profile_a_costs() {
        let s = Scenario::from_spec(&multi_pne_spec()).unwrap();
        let mut p = InvestmentProfile::zeros(2, s.graph().edge_count());
        let mut r1 = vec![0.0; s.graph().edge_count()];
        for (a, b) in [("n1", "n2"), ("n1", "n4"), ("n2", "n5"), ("n4", "n5")] {
            r1[edge_ix(&s, a, b)] = 4.0;
        }
        let mut r2 = vec![0.0; s.graph().edge_count()];
        for (a, b) in [("n2", "n3"), ("n3", "n6"), ("n5", "n6")] {
            r2[edge_ix(&s, a, b)] = 4.0;
        }
        p.set_row(0, &r1);
        p.set_row(1, &r2);
        let bd = evaluate(&s, &p).unwrap();
        assert_relative_eq!(bd.true_costs[0], (-8.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(bd.perceived_costs[0], (-4.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(bd.true_costs[1], (-12.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(bd.perceived_costs[1], (-6.0f64).exp(), max_relative = 1e-12);
    }

    /// Second known equilibrium: D1 = (1,5,5,5), D2 = (4,3.14,3.14,1.72).
    #[test]
    #[allow(clippy::approx_constant)] // 3.14 is a reference investment, not pi
    fn multi_pne_profile_b_costs() {
        let s = Scenario::from_spec(&multi_pne_spec()).unwrap();
        let mut p = InvestmentProfile::zeros(2, s.graph().edge_count());
        let mut r1 = vec![0.0; s.graph().edge_count()];
        r1[edge_ix(&s, "n1", "n2")] = 1.0;
        for (a, b) in [("n1", "n4"), ("n2", "n5"), ("n4", "n5")] {
            r1[edge_ix(&s, a, b)] = 5.0;
        }
        let mut r2 = vec![0.0; s.graph().edge_count()];
        r2[edge_ix(&s, "n1", "n2")] = 4.0;
        r2[edge_ix(&s, "n2", "n3")] = 3.14;
        r2[edge_ix(&s, "n3", "n6")] = 3.14;
        r2[edge_ix(&s, "n5", "n6")] = 1.72;
        p.set_row(0, &r1);
        p.set_row(1, &r2);
        let bd = evaluate(&s, &p).unwrap();
        assert_relative_eq!(bd.true_costs[0], (-10.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(bd.perceived_costs[0], (-2.0 * 5.0f64.sqrt()).exp(), max_relative = 1e-12);
        // rounded reference values: exponents 11.28 and 5.78 within 0.01
        assert!((-bd.true_costs[1].ln() - 11.28).abs() < 0.01);
        assert!((-bd.perceived_costs[1].ln() - 5.78).abs() < 0.01);
    }

    #[test]
    fn zero_losses_give_zero_costs() {
        let mut spec = multi_pne_spec();
        for d in &mut spec.defenders {
            for a in &mut d.3 {
                a.1 = 0.0;
            }
        }
        let s = Scenario::from_spec(&spec).unwrap();
        let p = InvestmentProfile::zeros(2, s.graph().edge_count());
        let bd = evaluate(&s, &p).unwrap();
        assert_eq!(bd.total_true_cost, 0.0);
        assert_eq!(bd.perceived_costs, vec![0.0, 0.0]);
    }

    #[test]
    fn infeasible_profile_is_rejected() {
        let s = Scenario::from_spec(&multi_pne_spec()).unwrap();
        let mut p = InvestmentProfile::zeros(2, s.graph().edge_count());
        let mut row = vec![0.0; s.graph().edge_count()];
        row[0] = 17.0; // over D1's budget of 16
        p.set_row(0, &row);
        assert!(evaluate(&s, &p).is_err());
        let mut q = InvestmentProfile::zeros(2, s.graph().edge_count());
        row[0] = -1.0;
        q.set_row(0, &row);
        assert!(evaluate(&s, &q).is_err());
    }

    #[test]
    fn alpha_one_perceived_equals_true() {
        let mut spec = multi_pne_spec();
        spec.defenders[0].2 = 1.0;
        spec.defenders[1].2 = 1.0;
        let s = Scenario::from_spec(&spec).unwrap();
        let mut p = InvestmentProfile::zeros(2, s.graph().edge_count());
        let row: Vec<f64> = (0..s.graph().edge_count()).map(|i| 0.3 * i as f64).collect();
        p.set_row(0, &row);
        let bd = evaluate(&s, &p).unwrap();
        for k in 0..2 {
            assert_relative_eq!(bd.true_costs[k], bd.perceived_costs[k], max_relative = 1e-12);
        }
    }
}
