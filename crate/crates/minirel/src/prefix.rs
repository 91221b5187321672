//! Polynomial first stage: pre-fixing the designation pattern.
//!
//! Instead of letting the exact solver choose which clusters represent
//! which groups, this stage estimates a *myopic* cost `m_gk` of making
//! cluster `k` α-represent group `g` (holding everything else fixed), then
//! picks the cheapest pattern meeting every target by solving
//!
//! ```text
//!   min  Σ m_gk · y_gk
//!   s.t. Σ_k y_gk ≥ β_g                    (every group reaches its target)
//!        Σ_{g of feature f} y_gk ≤ ⌊1/α⌋   (per cluster and feature)
//! ```
//!
//! The constraint matrix is an interval matrix — totally unimodular — so
//! the LP relaxation has integral vertices. The solver returns basic
//! solutions, integrality is asserted (within 1e-9) rather than assumed,
//! and the booleans are read off directly: no branching in this stage.

use crate::error::Error;
use crate::lp::{solve_lp, LinearProgram, LpStatus, RowSense};
use crate::model::{floor_recip, ClusteringProblem, FairnessSpec, GroupStructure};

/// Which myopic estimate fills the cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MyopicCostKind {
    /// Sum of the `q` smallest reassignment penalties
    /// `D(x, c_k) − D(x, c_current(x))` over group members outside the
    /// cluster, where `q` points must move in to reach an α share.
    #[default]
    LocalCost,
    /// Representation shortfall `max(α − p_gk, 0)` where `p_gk` is the
    /// group's current proportion of the cluster.
    Proportion,
    /// The shortfall scaled by cluster size, `|C_k| · max(α − p_gk, 0)`.
    WeightedProportion,
}

/// Myopic costs for every candidate `(group, cluster)` pair. `None` marks
/// pairs outside the candidate set 𝒲: the group cannot supply enough
/// movable points (or the pair is disallowed by the spec), so no pattern
/// may designate it.
#[derive(Debug, Clone)]
pub struct MyopicCostMatrix {
    pub kind: MyopicCostKind,
    /// `cost[g][k]`.
    pub cost: Vec<Vec<Option<f64>>>,
}

impl MyopicCostMatrix {
    pub fn n_groups(&self) -> usize {
        self.cost.len()
    }

    pub fn k(&self) -> usize {
        self.cost.first().map_or(0, Vec::len)
    }

    pub fn get(&self, g: usize, k: usize) -> Option<f64> {
        self.cost[g][k]
    }
}

/// A chosen designation pattern with its proxy objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixAssignment {
    /// `y[g][k]`.
    pub y: Vec<Vec<bool>>,
    pub objective: f64,
}

/// Smallest number of group members that must move into the cluster so the
/// group reaches an α share, i.e. the least `q ≥ 0` with
/// `q + count ≥ α (q + size)`. Closed form `⌈(α·size − count)/(1−α)⌉`
/// clamped at zero; an empty cluster needs nothing. For α = 1 the share is
/// reachable only if the group already fills the cluster — otherwise no
/// finite `q` works and the pair is undefined (`None`).
pub fn q_needed(cluster_size: usize, group_count: usize, alpha: f64) -> Option<usize> {
    assert!(
        group_count <= cluster_size,
        "group count {group_count} exceeds cluster size {cluster_size}"
    );
    if cluster_size == 0 {
        return Some(0);
    }
    let ok = |q: usize| {
        (q + group_count) as f64 >= alpha * (q + cluster_size) as f64 - 1e-9
    };
    if ok(0) {
        return Some(0);
    }
    if alpha >= 1.0 - 1e-12 {
        // q + count ≥ q + size requires count = size, handled above.
        return None;
    }
    let t = (alpha * cluster_size as f64 - group_count as f64) / (1.0 - alpha);
    // Robust ceiling: don't let float dust push an exact integer up.
    let mut q = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.ceil() };
    if q < 0.0 {
        q = 0.0;
    }
    let mut q = q as usize;
    while !ok(q) {
        q += 1;
    }
    while q > 0 && ok(q - 1) {
        q -= 1;
    }
    Some(q)
}

/// Builds the myopic cost matrix for the current assignment at the given
/// centers. A pair `(g,k)` is defined when the spec allows it and the group
/// has at least `q` members outside the cluster to move in; its cost then
/// follows `kind`. Already-represented pairs (q = 0) cost zero under every
/// kind, as do empty clusters (any future member satisfies them for the
/// majority regimes this stage targets).
pub fn myopic_costs(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    assignment: &[usize],
    spec: &FairnessSpec,
    kind: MyopicCostKind,
) -> MyopicCostMatrix {
    let groups = &problem.groups;
    let k = problem.k;
    let n = problem.dataset.n();
    assert_eq!(assignment.len(), n, "assignment covers every point");

    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    let mut counts = vec![vec![0usize; k]; groups.n_groups()];
    for f in 0..groups.n_features() {
        for (i, &c) in assignment.iter().enumerate() {
            counts[groups.group_of_point(f, i)][c] += 1;
        }
    }

    let mut cost = vec![vec![None; k]; groups.n_groups()];
    for g in 0..groups.n_groups() {
        let alpha = spec.alpha.for_group(g);
        for c in 0..k {
            if !spec.allows(g, c) {
                continue;
            }
            let Some(q) = q_needed(sizes[c], counts[g][c], alpha) else {
                continue;
            };
            let donors = groups.group_size(g) - counts[g][c];
            if donors < q {
                continue;
            }
            cost[g][c] = Some(if q == 0 || sizes[c] == 0 {
                0.0
            } else {
                match kind {
                    MyopicCostKind::LocalCost => {
                        let mut deltas: Vec<f64> = groups
                            .members(g)
                            .iter()
                            .filter(|&&i| assignment[i] != c)
                            .map(|&i| {
                                problem.point_cost(i, &centers[c])
                                    - problem.point_cost(i, &centers[assignment[i]])
                            })
                            .collect();
                        deltas.sort_by(f64::total_cmp);
                        deltas[..q].iter().sum()
                    }
                    MyopicCostKind::Proportion => {
                        let p = counts[g][c] as f64 / sizes[c] as f64;
                        (alpha - p).max(0.0)
                    }
                    MyopicCostKind::WeightedProportion => {
                        let p = counts[g][c] as f64 / sizes[c] as f64;
                        sizes[c] as f64 * (alpha - p).max(0.0)
                    }
                }
            });
        }
    }
    MyopicCostMatrix { kind, cost }
}

/// The pre-fixing LP over the defined pairs of groups with positive
/// targets. Returns the program and the `(group, cluster)` pair of each
/// column, so callers (and oracle tests) can solve the identical model.
pub fn build_prefix_lp(
    matrix: &MyopicCostMatrix,
    spec: &FairnessSpec,
    groups: &GroupStructure,
) -> (LinearProgram, Vec<(usize, usize)>) {
    let k = matrix.k();
    let pairs: Vec<(usize, usize)> = (0..matrix.n_groups())
        .filter(|&g| spec.beta[g] > 0)
        .flat_map(|g| (0..k).filter(move |&c| matrix.get(g, c).is_some()).map(move |c| (g, c)))
        .collect();

    let mut lp = LinearProgram::new(pairs.len());
    for (col, &(g, c)) in pairs.iter().enumerate() {
        lp.set_bounds(col, 0.0, 1.0);
        lp.set_objective(col, matrix.get(g, c).unwrap());
    }
    for g in 0..matrix.n_groups() {
        if spec.beta[g] == 0 {
            continue;
        }
        let coeffs: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(pg, _))| pg == g)
            .map(|(col, _)| (col, 1.0))
            .collect();
        lp.add_row(RowSense::Ge, spec.beta[g] as f64, coeffs);
    }
    for c in 0..k {
        for f in 0..groups.n_features() {
            let feature_groups = groups.groups_of_feature(f);
            let coeffs: Vec<(usize, f64)> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(pg, pc))| pc == c && feature_groups.contains(&pg))
                .map(|(col, _)| (col, 1.0))
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            // Conservative cap under per-group α: the largest α of the
            // feature bounds how many of its groups can share a cluster.
            let cap = floor_recip(spec.alpha.max_over(feature_groups));
            lp.add_row(RowSense::Le, cap as f64, coeffs);
        }
    }
    (lp, pairs)
}

/// Solves the pre-fixing problem: minimum total myopic cost over patterns
/// meeting every target and every per-feature cap.
///
/// Solved as a pure LP; by total unimodularity the basic optimum must be
/// integral, which is asserted (within 1e-9) and then rounded to exact
/// booleans. Infeasibility is reported as [`Error::PrefixInfeasible`]
/// naming a group whose target cannot be met (found by re-solving with that
/// group's target dropped).
pub fn solve_prefix(
    matrix: &MyopicCostMatrix,
    spec: &FairnessSpec,
    groups: &GroupStructure,
) -> Result<PrefixAssignment, Error> {
    let k = matrix.k();
    // Clear shortfalls first: fewer candidate clusters than the target.
    for g in 0..matrix.n_groups() {
        let available = (0..k).filter(|&c| matrix.get(g, c).is_some()).count();
        if available < spec.beta[g] {
            return Err(Error::PrefixInfeasible {
                group: groups.group_label(g),
                detail: format!(
                    "only {available} candidate clusters can represent the group, target β = {}",
                    spec.beta[g]
                ),
            });
        }
    }

    let (lp, pairs) = build_prefix_lp(matrix, spec, groups);
    let sol = solve_lp(&lp).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(name_culprit(matrix, spec, groups)),
        LpStatus::Unbounded => {
            return Err(Error::NumericalFailure(
                "pre-fixing LP reported unbounded over a bounded box".into(),
            ));
        }
    }

    let mut y = vec![vec![false; k]; matrix.n_groups()];
    for (col, &(g, c)) in pairs.iter().enumerate() {
        let v = sol.values[col];
        if (v - v.round()).abs() > 1e-9 {
            return Err(Error::NumericalFailure(format!(
                "pre-fixing LP vertex not integral: y[{g}][{c}] = {v}"
            )));
        }
        y[g][c] = v.round() == 1.0;
    }
    Ok(PrefixAssignment { y, objective: sol.objective })
}

/// Pins infeasibility on a group by dropping one target at a time.
fn name_culprit(
    matrix: &MyopicCostMatrix,
    spec: &FairnessSpec,
    groups: &GroupStructure,
) -> Error {
    for g in 0..matrix.n_groups() {
        if spec.beta[g] == 0 {
            continue;
        }
        let mut relaxed = spec.clone();
        relaxed.beta[g] = 0;
        let (lp, _) = build_prefix_lp(matrix, &relaxed, groups);
        if let Ok(sol) = solve_lp(&lp) {
            if sol.status == LpStatus::Optimal {
                return Error::PrefixInfeasible {
                    group: groups.group_label(g),
                    detail: format!(
                        "dropping this group's target β = {} makes the pre-fixing problem feasible",
                        spec.beta[g]
                    ),
                };
            }
        }
    }
    Error::PrefixInfeasible {
        group: "multiple groups".into(),
        detail: format!(
            "targets β = {:?} exceed the joint representation capacity",
            spec.beta
        ),
    }
}
