//! Crate-wide error type.

use crate::fmra::{FairAssignment, InfeasibleCertificate};

/// Errors surfaced by the clustering, solver, and rounding layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A center update was requested for an empty cluster.
    #[error("cluster {cluster} is empty; cannot compute a center")]
    DegenerateCluster { cluster: usize },

    /// The LP/MILP engine failed numerically (pivot stall, singular basis).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A solver hit its time limit. The best feasible fair assignment found
    /// so far, if any, rides along so callers can degrade gracefully.
    #[error("time limit exceeded{}", if incumbent.is_some() { " (incumbent available)" } else { "" })]
    TimeLimit { incumbent: Option<Box<FairAssignment>> },

    /// No MR-fair clustering exists for the requested (α, β) targets.
    #[error("{0}")]
    Infeasible(Box<InfeasibleCertificate>),

    /// A fixed representation pattern `y` violates the per-feature cap of
    /// ⌊1/α⌋ simultaneously represented groups.
    #[error("invalid representation pattern: {0}")]
    InvalidPrefix(String),

    /// The pre-fixing problem itself is infeasible; names a violated group.
    #[error("pre-fixing infeasible for group {group}: {detail}")]
    PrefixInfeasible { group: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
