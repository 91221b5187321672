//! Minimum-representation-fair k-means and k-medians clustering.
//!
//! A clustering is *minimum-representation fair* (MR-fair) when every
//! protected group `g` holds at least an `α` fraction of the points in at
//! least `β_g` clusters. This crate implements an alternating-minimization
//! algorithm for that constraint family: it alternates between a *fair
//! assignment* step (an optimization problem, since greedy nearest-center
//! assignment may violate fairness) and the usual center-update step, until
//! the cost reaches a fixed point.
//!
//! The fair assignment step can be solved several ways, all provided here:
//!
//! * exactly, as a mixed-binary program over assignment indicators `z_ik`
//!   and representation indicators `y_gk` ([`driver::Strategy::FullIp`]);
//! * in two stages — first choose which clusters represent which groups
//!   (integral `y`, fractional `z`), then assign points under the fixed
//!   representation pattern ([`driver::Strategy::TwoStageIp`] /
//!   [`driver::Strategy::TwoStageFlow`]);
//! * with the representation pattern pre-fixed once before the loop, either
//!   by the same first-stage program ([`driver::Strategy::PrefixFlow`]) or by
//!   a polynomial-time heuristic whose LP is integral by total unimodularity
//!   ([`driver::Strategy::PrefixHeurFlow`]), after which each iteration only
//!   solves an LP relaxation and rounds it through a min-cost flow network
//!   with a provable additive bound on the fairness violation.
//!
//! Everything is self-contained: the crate ships its own bounded-variable
//! revised simplex solver with branch-and-bound ([`lp`]), a successive
//! shortest path min-cost flow solver ([`flow`]), synthetic instance
//! generators ([`synth`]), and an unconstrained Lloyd baseline ([`lloyd`]).
//!
//! # Determinism
//!
//! Every routine that consumes randomness takes an explicit RNG; identical
//! seeds reproduce identical results bit-for-bit, independent of thread
//! count. All tie-breaking rules (nearest-center ties, k-medians candidate
//! ties, simplex pivoting, branching order) are deterministic and documented
//! on the respective functions.
//!
//! # Crate features
//!
//! * `parallel` (default) — data-parallel distance, cost, and myopic-cost
//!   loops via rayon. Disable (`--no-default-features`) for a fully
//!   sequential build; results are identical either way.

pub mod driver;
pub mod error;
pub mod flow;
pub mod fmra;
pub mod lloyd;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod prefix;
pub mod synth;

pub use error::Error;
pub use model::{
    compute_beta, Alpha, BetaPolicy, ClusteringProblem, ClusteringSolution, Dataset, Distance,
    FairnessSpec, GroupStructure, Mode,
};
