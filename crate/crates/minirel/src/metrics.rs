//! Fairness and cost metrics for clusterings.
//!
//! The central quantity is `Λ(C, X_g, α)`: the number of *nonempty* clusters
//! in which group `g` holds at least an `α` fraction of the points. A
//! solution meets its quota for `g` when `Λ ≥ β_g`; the *max deviation*
//! aggregates the shortfalls. For solutions that designated clusters per
//! group (a `y` matrix), each designated pair also gets an *additive
//! violation* `δ_gk = max(0, α·|C_k| − |C_k ∩ X_g|)` — the number of extra
//! group members the cluster would need to actually α-represent the group.

use crate::model::{ClusteringProblem, ClusteringSolution, FairnessSpec, GroupStructure};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One designated (group, cluster) pair's representation shortfall.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveViolation {
    pub group: usize,
    pub cluster: usize,
    /// `max(0, α·|C_k| − |C_k ∩ X_g|)`; zero exactly when the pair's
    /// representation constraint holds.
    pub delta: f64,
}

/// Fairness summary of one solution. See [`fairness_metrics`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// `Λ` per global group id.
    pub lambda: Vec<usize>,
    /// `max_g max(β_g − Λ_g, 0)`.
    pub max_deviation: usize,
    /// `δ_gk` for every designated pair (`y_gk = 1`), group-major order.
    pub violations: Vec<AdditiveViolation>,
    /// Sum of all `δ_gk`.
    pub additive_sum: f64,
    /// Largest single `δ_gk`.
    pub additive_max: f64,
    /// `additive_sum / n`.
    pub normalized_additive_sum: f64,
    /// `additive_max / n`.
    pub normalized_additive_max: f64,
    /// Whether `y` was inferred (solution carried none).
    pub y_inferred: bool,
}

/// Per-cluster sizes and per-(group, cluster) member counts for an
/// assignment.
fn cluster_counts(
    assignment: &[usize],
    k: usize,
    groups: &GroupStructure,
) -> (Vec<usize>, Vec<Vec<usize>>) {
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
    (sizes, counts)
}

/// Number of nonempty clusters where group `g` holds at least an `α`
/// fraction of the points. Empty clusters never count: representation in a
/// cluster with no points is meaningless.
///
/// The count is invariant under relabeling of cluster indices.
pub fn lambda_count(
    solution: &ClusteringSolution,
    groups: &GroupStructure,
    g: usize,
    alpha: f64,
) -> usize {
    let (sizes, counts) = cluster_counts(&solution.assignment, solution.k(), groups);
    lambda_from_counts(&sizes, &counts[g], alpha)
}

fn lambda_from_counts(sizes: &[usize], group_counts: &[usize], alpha: f64) -> usize {
    sizes
        .iter()
        .zip(group_counts)
        .filter(|&(&s, &c)| s >= 1 && c as f64 >= alpha * s as f64 - 1e-9)
        .count()
}

/// Greedy representation pattern for solutions that never chose one (the
/// unconstrained baselines): each group is paired with its `β_g` nonempty
/// clusters of highest group proportion (ties: lower cluster index). When
/// fewer nonempty clusters exist than `β_g`, all of them are designated.
fn infer_y(
    sizes: &[usize],
    counts: &[Vec<usize>],
    spec: &FairnessSpec,
    k: usize,
) -> Vec<Vec<bool>> {
    let mut y = vec![vec![false; k]; counts.len()];
    for (g, row) in counts.iter().enumerate() {
        if spec.beta[g] == 0 {
            continue;
        }
        let mut candidates: Vec<usize> = (0..k).filter(|&c| sizes[c] >= 1).collect();
        // Sort by descending proportion, ties by ascending cluster index.
        candidates.sort_by(|&a, &b| {
            let pa = row[a] as f64 / sizes[a] as f64;
            let pb = row[b] as f64 / sizes[b] as f64;
            pb.partial_cmp(&pa).unwrap().then(a.cmp(&b))
        });
        for &c in candidates.iter().take(spec.beta[g]) {
            y[g][c] = true;
        }
    }
    y
}

/// Computes the full fairness summary of a solution against a spec.
///
/// Additive violations are measured on the solution's own designation
/// matrix `y` when present; otherwise a greedy pattern is inferred (see
/// [`MetricsReport::y_inferred`]) so unconstrained baselines can be compared
/// on the same scale.
pub fn fairness_metrics(
    solution: &ClusteringSolution,
    spec: &FairnessSpec,
    groups: &GroupStructure,
) -> MetricsReport {
    let k = solution.k();
    let (sizes, counts) = cluster_counts(&solution.assignment, k, groups);

    let lambda: Vec<usize> = (0..groups.n_groups())
        .map(|g| lambda_from_counts(&sizes, &counts[g], spec.alpha.for_group(g)))
        .collect();
    let max_deviation = lambda
        .iter()
        .enumerate()
        .map(|(g, &l)| spec.beta[g].saturating_sub(l))
        .max()
        .unwrap_or(0);

    let (y, y_inferred) = match &solution.y {
        Some(y) => (y.clone(), false),
        None => (infer_y(&sizes, &counts, spec, k), true),
    };

    let mut violations = Vec::new();
    for (g, row) in y.iter().enumerate() {
        let alpha = spec.alpha.for_group(g);
        for (c, &designated) in row.iter().enumerate() {
            if designated {
                let delta = (alpha * sizes[c] as f64 - counts[g][c] as f64).max(0.0);
                // Snap float dust so satisfied constraints report exactly 0.
                let delta = if delta < 1e-9 { 0.0 } else { delta };
                violations.push(AdditiveViolation { group: g, cluster: c, delta });
            }
        }
    }
    let additive_sum: f64 = violations.iter().map(|v| v.delta).sum();
    let additive_max = violations.iter().map(|v| v.delta).fold(0.0, f64::max);
    let n = groups.n() as f64;

    MetricsReport {
        lambda,
        max_deviation,
        violations,
        additive_sum,
        additive_max,
        normalized_additive_sum: additive_sum / n,
        normalized_additive_max: additive_max / n,
        y_inferred,
    }
}

/// Total assignment cost `Σ_i D(x_i, c_{assignment[i]})`.
///
/// **Requires crate feature `parallel`** for the data-parallel path; the
/// sequential build computes the identical sum in the identical order.
pub fn clustering_cost(
    assignment: &[usize],
    centers: &[Vec<f64>],
    problem: &ClusteringProblem,
) -> f64 {
    let term = |i: usize| problem.point_cost(i, &centers[assignment[i]]);
    #[cfg(feature = "parallel")]
    {
        // Chunked so the reduction order (and hence the float sum) matches
        // the sequential build exactly.
        const CHUNK: usize = 1024;
        let n = assignment.len();
        let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                (c * CHUNK..((c + 1) * CHUNK).min(n)).map(term).sum::<f64>()
            })
            .collect();
        partials.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        const CHUNK: usize = 1024;
        let n = assignment.len();
        (0..n.div_ceil(CHUNK))
            .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(term).sum::<f64>())
            .sum()
    }
}
