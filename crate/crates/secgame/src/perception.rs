//! Prelec probability weighting and the exponential attack-probability
//! class used throughout the cost functions.
//!
//! With exponential probabilities `p(x) = p0 * exp(-x)`, the perceived
//! probability of an edge under weighting level `alpha` is
//! `exp(-(x + a)^alpha)` where `a = -ln(p0)`. All cost evaluation works on
//! these exponents so that large budgets never underflow mid-computation.

use crate::error::{Error, Result};
use crate::graph::AttackGraph;

/// Probabilities smaller than this clamp to zero (with a log diagnostic);
/// sweeps with large budgets would otherwise underflow.
pub const PROB_UNDERFLOW_FLOOR: f64 = 1e-300;

/// A defender's probability weighting level, `alpha` in (0, 1].
/// `alpha = 1` is veridical perception; smaller values overweight small
/// probabilities and underweight large ones.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BehavioralLevel(f64);

impl BehavioralLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!("alpha {alpha} out of (0,1]")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn is_behavioral(self) -> bool {
        self.0 < 1.0
    }
}

impl TryFrom<f64> for BehavioralLevel {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BehavioralLevel> for f64 {
    fn from(b: BehavioralLevel) -> f64 {
        b.0
    }
}

/// Which probability function family backs the per-edge model. Only the
/// exponential class is populated; the general interface (log-convex,
/// strictly decreasing, twice differentiable) is documented here but
/// intentionally not implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProbabilityClass {
    Exponential,
}

/// Per-edge exponential probability model: each edge carries an offset
/// `a_e = -ln(p0_e) >= 0`, so the true probability at total investment `x`
/// is `exp(-(x + a_e))`.
#[derive(Debug, Clone)]
pub struct ProbabilityModel {
    class: ProbabilityClass,
    offsets: Vec<f64>,
}

impl ProbabilityModel {
    pub fn exponential_from_graph(graph: &AttackGraph) -> Self {
        let offsets = graph.edges().iter().map(|e| -e.p0.ln()).collect();
        Self { class: ProbabilityClass::Exponential, offsets }
    }

    pub fn class(&self) -> ProbabilityClass {
        self.class
    }

    /// `a_e = -ln(p0_e)` for every edge, in edge-index order.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
}

/// Prelec weighting `w(p) = exp(-(-ln p)^alpha)`.
///
/// Fixes 0 and 1, is strictly increasing on [0,1], and for `alpha < 1`
/// overweights probabilities below `1/e` and underweights those above.
pub fn prelec_weight(p: f64, alpha: BehavioralLevel) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Domain(format!("probability {p} out of [0,1]")));
    }
    if p == 0.0 {
        return Ok(0.0); // continuous limit
    }
    Ok(clamp_probability((-(-p.ln()).powf(alpha.alpha())).exp()))
}

/// Perceived-exponent transform `h(x) = (x + a_e)^alpha`: minus the log of
/// the perceived edge probability under the exponential class. Concave and
/// nondecreasing in the total investment `x`.
pub fn edge_exponent(x_total: f64, a_e: f64, alpha: BehavioralLevel) -> Result<f64> {
    if x_total < 0.0 || !x_total.is_finite() {
        return Err(Error::Domain(format!("investment {x_total} must be nonnegative")));
    }
    Ok((x_total + a_e).powf(alpha.alpha()))
}

/// True edge probability `exp(-(x + a_e))`, strictly decreasing in `x`.
pub fn true_edge_prob(x_total: f64, a_e: f64) -> Result<f64> {
    if x_total < 0.0 || !x_total.is_finite() {
        return Err(Error::Domain(format!("investment {x_total} must be nonnegative")));
    }
    Ok(clamp_probability((-(x_total + a_e)).exp()))
}

/// Clamps denormal-range probabilities to zero, logging once per call site
/// worth of underflow. Exponents are the preferred representation; this
/// guard only matters when a caller insists on raw probabilities.
pub fn clamp_probability(p: f64) -> f64 {
    if p != 0.0 && p < PROB_UNDERFLOW_FLOOR {
        log::warn!("probability {p:e} below underflow floor; clamped to 0");
        0.0
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lvl(a: f64) -> BehavioralLevel {
        BehavioralLevel::new(a).unwrap()
    }

    #[test]
    fn alpha_domain() {
        assert!(BehavioralLevel::new(0.0).is_err());
        assert!(BehavioralLevel::new(1.0 + 1e-12).is_err());
        assert!(BehavioralLevel::new(f64::NAN).is_err());
        assert!(BehavioralLevel::new(1.0).is_ok());
    }

    #[test]
    fn prelec_identity_at_alpha_one() {
        assert_relative_eq!(prelec_weight(0.5, lvl(1.0)).unwrap(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn prelec_fixed_point_at_inverse_e() {
        let p = (-1.0f64).exp();
        for a in [0.2, 0.5, 0.9, 1.0] {
            assert_relative_eq!(prelec_weight(p, lvl(a)).unwrap(), p, max_relative = 1e-14);
        }
    }

    #[test]
    fn prelec_closed_form_value() {
        // w(e^-4) at alpha 0.5 is e^-2
        let p = (-4.0f64).exp();
        assert_relative_eq!(prelec_weight(p, lvl(0.5)).unwrap(), (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn prelec_domain_and_limits() {
        assert!(prelec_weight(-0.1, lvl(0.5)).is_err());
        assert!(prelec_weight(1.1, lvl(0.5)).is_err());
        assert_eq!(prelec_weight(0.0, lvl(0.5)).unwrap(), 0.0);
        assert_eq!(prelec_weight(1.0, lvl(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn edge_exponent_values() {
        assert_relative_eq!(edge_exponent(4.0, 0.0, lvl(0.5)).unwrap(), 2.0);
        assert_eq!(edge_exponent(0.0, 0.0, lvl(0.7)).unwrap(), 0.0);
        let a = -(0.5f64).ln();
        assert_relative_eq!(edge_exponent(3.0, a, lvl(1.0)).unwrap(), 3.0 + a, max_relative = 1e-15);
        assert!(edge_exponent(-0.1, 0.0, lvl(0.5)).is_err());
    }

    #[test]
    fn true_edge_prob_values() {
        assert_eq!(true_edge_prob(0.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(true_edge_prob(6.0, 0.0).unwrap(), (-6.0f64).exp(), max_relative = 1e-15);
        let a = -(0.5f64).ln();
        assert_relative_eq!(true_edge_prob(1.0, a).unwrap(), 0.5 * (-1.0f64).exp(), max_relative = 1e-14);
        assert!(true_edge_prob(-1.0, 0.0).is_err());
    }

    #[test]
    fn prelec_of_true_prob_matches_exponent_form() {
        // consistency of the two formulations, 1e-12
        let alpha = lvl(0.6);
        for &(x, a) in &[(0.0, 0.0), (0.5, 0.3), (2.0, 0.0), (7.3, 1.2), (30.0, 0.0)] {
            let via_prob = prelec_weight(true_edge_prob(x, a).unwrap(), alpha).unwrap();
            let via_exp = (-edge_exponent(x, a, alpha).unwrap()).exp();
            assert!((via_prob - via_exp).abs() < 1e-12, "x={x} a={a}");
        }
    }

    #[test]
    fn prelec_over_and_under_weighting_grid() {
        let alpha = lvl(0.5);
        let fixed = (-1.0f64).exp();
        let mut prev = 0.0;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let w = prelec_weight(p, alpha).unwrap();
            assert!(w > prev, "strictly increasing");
            prev = w;
            if p < fixed - 1e-9 {
                assert!(w > p, "overweights below 1/e: p={p}");
            } else if p > fixed + 1e-9 {
                assert!(w < p, "underweights above 1/e: p={p}");
            }
        }
    }
}
