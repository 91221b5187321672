//! Branch-and-bound over the binary variables of a mixed-binary program.
//!
//! A single simplex instance is reused for every node: moving between nodes
//! resets the previously fixed bounds and applies the new node's fixes in
//! place, so each child re-solve starts from the parent's (dual-feasible-ish)
//! basis and typically needs only a few pivots. Node selection is best-first
//! on the relaxation bound with depth-first plunging — after branching, the
//! round-to-nearest child is explored immediately to find incumbents early,
//! while the sibling waits in a priority queue keyed by `(bound, id)` for
//! deterministic order.

use std::collections::BinaryHeap;
use std::time::Duration;

use super::simplex::Simplex;
use super::{
    effective_time_limit, LinearProgram, LpError, LpSolution, LpStatus, MixedBinaryProgram,
    INTEGRALITY_TOL,
};

/// Bound-pruning slack: nodes within this of the incumbent cannot contain a
/// meaningfully better solution.
const PRUNE_TOL: f64 = 1e-9;

struct Node {
    id: u64,
    /// Parent's relaxation objective — a valid lower bound for this node.
    bound: f64,
    /// Bound fixes `(variable, value)` along the path from the root.
    fixes: Vec<(usize, f64)>,
}

/// Max-heap adapter popping the *smallest* `(bound, id)` first.
struct BestFirst(Node);

impl PartialEq for BestFirst {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for BestFirst {}
impl PartialOrd for BestFirst {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BestFirst {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(other.0.id.cmp(&self.0.id))
    }
}

/// Solves a mixed-binary program to optimality by branch-and-bound.
///
/// Returns an integral-in-the-binaries optimal solution, a solution with
/// [`LpStatus::Infeasible`] when no integral point exists, or
/// [`LpError::TimeLimit`] (carrying the best incumbent found, if any) when
/// the deadline passes first. Deterministic for identical inputs.
pub fn solve_mbp(
    mbp: &MixedBinaryProgram,
    time_limit: Option<Duration>,
) -> Result<LpSolution, LpError> {
    solve_mbp_with_hint(mbp, time_limit, None)
}

/// [`solve_mbp`] with a crash-basis hint for the root relaxation (see
/// [`super::solve_lp_with_hint`]): columns of a known-good assignment warm
/// the first solve, and every later node continues from its parent's basis.
pub fn solve_mbp_with_hint(
    mbp: &MixedBinaryProgram,
    time_limit: Option<Duration>,
    hint: Option<&[usize]>,
) -> Result<LpSolution, LpError> {
    mbp.lp.validate()?;
    let deadline = effective_time_limit(time_limit);
    let mut solver = Simplex::new(&mbp.lp)?;
    if let Some(cols) = hint {
        solver.crash_basis(cols);
    }

    let mut next_id: u64 = 1;
    let mut queue: BinaryHeap<BestFirst> = BinaryHeap::new();
    let mut plunge: Vec<Node> = Vec::new();
    let mut incumbent: Option<LpSolution> = None;
    let mut incumbent_obj = f64::INFINITY;
    let mut applied: Vec<(usize, f64)> = Vec::new();

    plunge.push(Node { id: 0, bound: f64::NEG_INFINITY, fixes: Vec::new() });

    loop {
        let node = match plunge.pop() {
            Some(n) => n,
            None => match queue.pop() {
                Some(BestFirst(n)) => n,
                None => break,
            },
        };
        if node.bound >= incumbent_obj - PRUNE_TOL {
            continue;
        }
        if let Some(d) = deadline {
            if std::time::Instant::now() >= d {
                return Err(LpError::TimeLimit { incumbent });
            }
        }

        for &(j, _) in &applied {
            solver.set_var_bounds(j, mbp.lp.lower[j], mbp.lp.upper[j]);
        }
        applied.clear();
        for &(j, v) in &node.fixes {
            solver.set_var_bounds(j, v, v);
        }
        applied.extend_from_slice(&node.fixes);

        match solver.solve()? {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(LpError::Numerical(
                    "relaxation unbounded during branch-and-bound".into(),
                ));
            }
            LpStatus::Optimal => {}
        }
        let bound = solver.objective_value();
        if bound >= incumbent_obj - PRUNE_TOL {
            continue;
        }
        let values = solver.structural_values();

        // Most-fractional binary; ties go to the lowest index (the list is
        // sorted and strict improvement is required to displace the leader).
        let mut branch: Option<(f64, usize)> = None;
        for &j in &mbp.binary {
            let dist = (values[j] - values[j].round()).abs();
            if dist > INTEGRALITY_TOL && branch.map_or(true, |(best, _)| dist > best) {
                branch = Some((dist, j));
            }
        }
        match branch {
            None => {
                let mut snapped = values;
                for &j in &mbp.binary {
                    snapped[j] = snapped[j].round();
                }
                let obj: f64 = mbp
                    .lp
                    .objective
                    .iter()
                    .zip(&snapped)
                    .map(|(c, x)| c * x)
                    .sum();
                if obj < incumbent_obj {
                    incumbent_obj = obj;
                    let mut sol = solver.extract_solution();
                    sol.values = snapped;
                    sol.objective = obj;
                    incumbent = Some(sol);
                }
            }
            Some((_, j)) => {
                let preferred = if values[j] >= 0.5 { 1.0 } else { 0.0 };
                let mut sibling_fixes = node.fixes.clone();
                sibling_fixes.push((j, 1.0 - preferred));
                queue.push(BestFirst(Node { id: next_id, bound, fixes: sibling_fixes }));
                next_id += 1;
                let mut child_fixes = node.fixes;
                child_fixes.push((j, preferred));
                plunge.push(Node { id: next_id, bound, fixes: child_fixes });
                next_id += 1;
            }
        }
    }

    match incumbent {
        Some(sol) => Ok(sol),
        None => Ok(LpSolution::non_optimal(LpStatus::Infeasible, mbp.lp.n_vars())),
    }
}

/// Counts variable groups left fractional after the fix-and-resolve step.
///
/// Procedure: solve the LP; fix every grouped variable whose value is
/// already integral (within the integrality tolerance) at that integer;
/// re-solve; count the groups that still contain a fractional variable.
/// With `var_groups[i]` holding point `i`'s assignment variables, the result
/// is the number of points whose cluster membership stays split at a vertex
/// of the restricted relaxation.
pub fn fractional_support_count(
    lp: &LinearProgram,
    var_groups: &[Vec<usize>],
) -> Result<usize, LpError> {
    let first = super::solve_lp(lp)?;
    if first.status != LpStatus::Optimal {
        return Err(LpError::Invalid(format!(
            "relaxation not optimal: {:?}",
            first.status
        )));
    }
    let mut fixed = lp.clone();
    for group in var_groups {
        for &j in group {
            let v = first.values[j];
            if (v - v.round()).abs() <= INTEGRALITY_TOL {
                fixed.set_bounds(j, v.round(), v.round());
            }
        }
    }
    let second = super::solve_lp(&fixed)?;
    if second.status != LpStatus::Optimal {
        return Err(LpError::Invalid(format!(
            "restricted relaxation not optimal: {:?}",
            second.status
        )));
    }
    let count = var_groups
        .iter()
        .filter(|group| {
            group
                .iter()
                .any(|&j| (second.values[j] - second.values[j].round()).abs() > INTEGRALITY_TOL)
        })
        .count();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowSense;

    #[test]
    fn knapsack_picks_heavier_item() {
        // max 3a + 2b s.t. a + b ≤ 1 ⇔ min −3a − 2b.
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -2.0);
        lp.add_row(RowSense::Le, 1.0, vec![(0, 1.0), (1, 1.0)]);
        let mbp = MixedBinaryProgram::new(lp, vec![0, 1]).unwrap();
        let sol = solve_mbp(&mbp, None).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-9);
        assert_eq!(sol.values[0], 1.0);
        assert_eq!(sol.values[1], 0.0);
    }

    #[test]
    fn integral_relaxation_returns_without_branching() {
        // min x s.t. x ≥ 1: relaxation optimum is already binary.
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_objective(0, 1.0);
        lp.add_row(RowSense::Ge, 1.0, vec![(0, 1.0)]);
        let mbp = MixedBinaryProgram::new(lp, vec![0]).unwrap();
        let sol = solve_mbp(&mbp, None).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.values[0], 1.0);
    }

    #[test]
    fn integer_infeasible_reported_as_status() {
        // 2a = 1 has a fractional LP solution but no binary one.
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 0.0, 1.0);
        lp.add_row(RowSense::Eq, 1.0, vec![(0, 2.0)]);
        let mbp = MixedBinaryProgram::new(lp, vec![0]).unwrap();
        let sol = solve_mbp(&mbp, None).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn branching_resolves_fractional_pair() {
        // min −a − b s.t. a + b ≤ 1.5: relaxation hits 1.5, integers reach 1.
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.add_row(RowSense::Le, 1.5, vec![(0, 1.0), (1, 1.0)]);
        let mbp = MixedBinaryProgram::new(lp, vec![0, 1]).unwrap();
        let sol = solve_mbp(&mbp, None).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert_eq!(sol.values[0] + sol.values[1], 1.0);
    }

    #[test]
    fn expired_deadline_yields_time_limit_error() {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_objective(0, 1.0);
        let mbp = MixedBinaryProgram::new(lp, vec![0]).unwrap();
        match solve_mbp(&mbp, Some(Duration::from_secs(0))) {
            Err(LpError::TimeLimit { incumbent: None }) => {}
            other => panic!("expected immediate time limit, got {other:?}"),
        }
    }

    #[test]
    fn support_count_zero_when_integral() {
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 2.0);
        lp.add_row(RowSense::Eq, 1.0, vec![(0, 1.0), (1, 1.0)]);
        let n = fractional_support_count(&lp, &[vec![0, 1]]).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn support_count_sees_forced_split() {
        // z0 + z1 = 1 and z0 − z1 = 0 force the 0.5/0.5 split: one point
        // remains fractional after fixing (nothing is integral to fix).
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_row(RowSense::Eq, 1.0, vec![(0, 1.0), (1, 1.0)]);
        lp.add_row(RowSense::Eq, 0.0, vec![(0, 1.0), (1, -1.0)]);
        let n = fractional_support_count(&lp, &[vec![0, 1]]).unwrap();
        assert_eq!(n, 1);
    }
}
