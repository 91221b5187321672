//! Self-contained linear programming: model types, a bounded-variable
//! revised simplex solver returning *basic* (vertex) optimal solutions, and
//! branch-and-bound over binary variables.
//!
//! Vertex solutions matter here: two downstream consumers depend on basis
//! structure, not just optimal values. The pre-fixing heuristic asserts that
//! its LP optimum is integral (a property of *vertices* of an integral
//! polytope), and the fractional-support bound counts points with fractional
//! basic variables after re-solving. Interior-point methods return face
//! centers and would break both, which is why this engine is simplex-based.
//!
//! Determinism: pricing, ratio-test tie-breaking, and branching follow fixed
//! index-based rules, so identical models always produce identical solutions.

mod branch;
mod simplex;

pub use branch::{fractional_support_count, solve_mbp, solve_mbp_with_hint};

use std::io::Write;
use std::time::Duration;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// One sparse constraint row `Σ coeffs · x  (≤ | ≥ | =)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A minimization LP over bounded variables with sparse constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    n_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    /// An LP with `n_vars` variables, all initially free with zero
    /// objective.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Sets `lower ≤ x_j ≤ upper` (either may be infinite).
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Sets the objective coefficient of `x_j`.
    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    /// Appends a constraint row. Duplicate column entries are allowed and
    /// are summed by the solver.
    pub fn add_row(&mut self, sense: RowSense, rhs: f64, coeffs: Vec<(usize, f64)>) {
        debug_assert!(coeffs.iter().all(|&(j, v)| j < self.n_vars && v.is_finite()));
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Checks structural well-formedness (finite coefficients, consistent
    /// bounds, column indices in range).
    pub fn validate(&self) -> Result<(), LpError> {
        for j in 0..self.n_vars {
            if self.lower[j] > self.upper[j] {
                return Err(LpError::Invalid(format!(
                    "variable {j} has lower bound {} above upper bound {}",
                    self.lower[j], self.upper[j]
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::Invalid(format!("objective of variable {j} not finite")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!("rhs of row {r} not finite")));
            }
            for &(j, v) in &row.coeffs {
                if j >= self.n_vars {
                    return Err(LpError::Invalid(format!(
                        "row {r} references variable {j} out of range"
                    )));
                }
                if !v.is_finite() {
                    return Err(LpError::Invalid(format!("row {r} has non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Writes the model in CPLEX-style LP interchange text for debugging.
    /// Variables are named `x0..x{n-1}`; an optional binary section lists
    /// the given indices.
    pub fn write_lp<W: Write>(&self, w: &mut W, binary: &[usize]) -> std::io::Result<()> {
        writeln!(w, "Minimize")?;
        write!(w, " obj:")?;
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write_term(w, c, j, first)?;
                first = false;
            }
        }
        if first {
            write!(w, " 0 x0")?;
        }
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        for (r, row) in self.rows.iter().enumerate() {
            write!(w, " c{r}:")?;
            let mut first = true;
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    write_term(w, v, j, first)?;
                    first = false;
                }
            }
            if first {
                write!(w, " 0 x0")?;
            }
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            writeln!(w, " {op} {}", row.rhs)?;
        }
        writeln!(w, "Bounds")?;
        for j in 0..self.n_vars {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                writeln!(w, " x{j} free")?;
            } else if lo == f64::NEG_INFINITY {
                writeln!(w, " -inf <= x{j} <= {hi}")?;
            } else if hi == f64::INFINITY {
                writeln!(w, " x{j} >= {lo}")?;
            } else {
                writeln!(w, " {lo} <= x{j} <= {hi}")?;
            }
        }
        if !binary.is_empty() {
            writeln!(w, "Binaries")?;
            write!(w, " ")?;
            for &j in binary {
                write!(w, "x{j} ")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "End")
    }
}

fn write_term<W: Write>(w: &mut W, c: f64, j: usize, first: bool) -> std::io::Result<()> {
    if c < 0.0 {
        write!(w, " - {} x{j}", -c)
    } else if first {
        write!(w, " {c} x{j}")
    } else {
        write!(w, " + {c} x{j}")
    }
}

/// An LP plus the subset of variables required to take values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBinaryProgram {
    pub lp: LinearProgram,
    /// Sorted, deduplicated variable indices flagged binary. Their bounds
    /// must lie within `[0, 1]` (possibly tighter, e.g. fixed).
    pub binary: Vec<usize>,
}

impl MixedBinaryProgram {
    pub fn new(lp: LinearProgram, mut binary: Vec<usize>) -> Result<Self, LpError> {
        binary.sort_unstable();
        binary.dedup();
        for &j in &binary {
            if j >= lp.n_vars() {
                return Err(LpError::Invalid(format!("binary flag on variable {j} out of range")));
            }
            let integer_endpoint = |b: f64| (b - b.round()).abs() <= 1e-9;
            if lp.lower[j] < -1e-12
                || lp.upper[j] > 1.0 + 1e-12
                || !integer_endpoint(lp.lower[j])
                || !integer_endpoint(lp.upper[j])
            {
                return Err(LpError::Invalid(format!(
                    "binary variable {j} must have integer bounds within [0,1], got [{}, {}]",
                    lp.lower[j], lp.upper[j]
                )));
            }
        }
        Ok(MixedBinaryProgram { lp, binary })
    }
}

/// Solve status of an LP or MBP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basis membership of a variable in a basic solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    NonBasic,
}

/// A basic solution: values, objective, status, and per-variable basis
/// markers. When `status` is not [`LpStatus::Optimal`] the values are
/// meaningless and `objective` is `NAN`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub basis: Vec<VarStatus>,
}

impl LpSolution {
    pub(crate) fn non_optimal(status: LpStatus, n_vars: usize) -> Self {
        LpSolution {
            values: vec![0.0; n_vars],
            objective: f64::NAN,
            status,
            basis: vec![VarStatus::NonBasic; n_vars],
        }
    }
}

/// Errors of the LP/MILP engine.
#[derive(Debug, thiserror::Error)]
pub enum LpError {
    /// Malformed model.
    #[error("invalid model: {0}")]
    Invalid(String),
    /// Pivoting stalled beyond the iteration cap or the basis went singular.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Branch-and-bound ran out of time; carries the best integral solution
    /// found, if any.
    #[error("MILP time limit exceeded{}", if incumbent.is_some() { " (incumbent available)" } else { "" })]
    TimeLimit { incumbent: Option<LpSolution> },
}

/// Primal feasibility tolerance (absolute, per constraint/bound).
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Integrality tolerance for branch-and-bound.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Solves an LP to a basic (vertex) optimal solution.
///
/// Deterministic: Dantzig pricing with lowest-index tie-breaks and a Bland's
/// rule fallback that guarantees termination.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with_hint(lp, None)
}

/// [`solve_lp`] with a warm-start hint: a set of columns to crash into the
/// initial basis (best effort — columns that would make the basis singular
/// are dropped). Useful when the caller knows a near-feasible vertex, e.g.
/// an existing assignment.
pub fn solve_lp_with_hint(
    lp: &LinearProgram,
    hint: Option<&[usize]>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut solver = simplex::Simplex::new(lp)?;
    if let Some(cols) = hint {
        solver.crash_basis(cols);
    }
    solver.solve()?;
    Ok(solver.extract_solution())
}

/// Convenience default node budget for branch-and-bound when no explicit
/// time limit is supplied.
pub(crate) fn effective_time_limit(limit: Option<Duration>) -> Option<std::time::Instant> {
    limit.map(|d| std::time::Instant::now() + d)
}
