//! Solver library for behavioral security games on attack graphs.
//!
//! Defenders split security budgets across the edges of a directed attack
//! graph. Each defender minimizes her *perceived* expected loss, where edge
//! attack probabilities are distorted by Prelec probability weighting with
//! a per-defender level `alpha` in (0,1]; `alpha = 1` is veridical. The
//! crate computes exact best responses, pure Nash equilibria via
//! best-response dynamics, the pooled-planner social optimum, the Price of
//! Behavioral Anarchy (PoBA), and parameter sweeps over `(alpha, budget)`
//! grids.
//!
//! Module map:
//! - [`graph`]: attack graphs, simple-path enumeration, min edge cuts
//! - [`perception`]: Prelec weighting and the exponential edge model
//! - [`scenario`]: validated scenarios (graph + defenders)
//! - [`cost`]: true / perceived cost evaluation of joint profiles
//! - [`solver`]: convex best-response solver (projected gradient plus
//!   active-set Newton polish)
//! - [`equilibrium`]: best-response dynamics, PNE verification and search
//! - [`poba`]: social optimum, PoBA, sweeps
//! - [`io`]: scenario files, reports, sweep CSV
//! - [`par`]: rayon-backed parallel map with a sequential fallback (disable
//!   the default `parallel` feature for single-threaded runs)

pub mod cost;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod io;
pub mod par;
pub mod perception;
pub mod poba;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
