//! Unconstrained Lloyd baseline: k-means++ seeding, greedy assignment,
//! center updates, and the alternating loop for both k-means and k-medians.
//!
//! Everything is deterministic given the RNG: seeding consumes randomness in
//! a fixed order, and every tie (equidistant centers, equal-cost median
//! candidates) breaks toward the lowest index.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Error;
use crate::metrics::clustering_cost;
use crate::model::{ClusteringProblem, ClusteringSolution, Mode};

/// A 64-bit seed; identical seeds reproduce identical runs bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// The stream cipher RNG used throughout the crate.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Default iteration cap for [`lloyd_run`].
pub const DEFAULT_MAX_ITER: usize = 300;

/// Picks `problem.k` initial centers by cost-weighted (k-means++ style)
/// sampling: the first uniformly, each next with probability proportional
/// to its assignment cost against the centers chosen so far. The weight is
/// the problem's own cost measure, so k-medians seeds with plain distance
/// rather than its square. Centers are distinct data points; when every
/// remaining point has weight zero (duplicates), the lowest-index unchosen
/// point is taken.
pub fn init_centers<R: Rng>(
    problem: &ClusteringProblem,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, Error> {
    let n = problem.dataset.n();
    let k = problem.k;
    if k > n {
        return Err(Error::invalid(format!("K = {k} exceeds the {n} data points")));
    }
    let mut chosen_ids = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let mut weight = vec![f64::INFINITY; n];

    let first = rng.gen_range(0..n);
    chosen_ids.push(first);
    is_chosen[first] = true;

    while chosen_ids.len() < k {
        let last = *chosen_ids.last().unwrap();
        let last_point = problem.dataset.point(last).to_vec();
        for i in 0..n {
            let d = problem.point_cost(i, &last_point);
            if d < weight[i] {
                weight[i] = d;
            }
        }
        let next = match WeightedIndex::new(weight.iter().copied()) {
            Ok(dist) => dist.sample(rng),
            // All weights zero: every point coincides with a chosen center.
            Err(_) => (0..n).find(|&i| !is_chosen[i]).expect("K ≤ n leaves a point"),
        };
        debug_assert!(!is_chosen[next], "positive weight implies unchosen");
        chosen_ids.push(next);
        is_chosen[next] = true;
    }
    Ok(chosen_ids
        .into_iter()
        .map(|i| problem.dataset.point(i).to_vec())
        .collect())
}

/// Assigns every point to its cheapest center; ties break to the lowest
/// cluster index.
///
/// **Requires crate feature `parallel`** for the data-parallel path; both
/// builds produce identical assignments.
pub fn greedy_assign(problem: &ClusteringProblem, centers: &[Vec<f64>]) -> Vec<usize> {
    assert!(!centers.is_empty(), "at least one center required");
    let best = |i: usize| {
        let mut best_k = 0usize;
        let mut best_d = problem.point_cost(i, &centers[0]);
        for (k, c) in centers.iter().enumerate().skip(1) {
            let d = problem.point_cost(i, c);
            if d < best_d {
                best_d = d;
                best_k = k;
            }
        }
        best_k
    };
    #[cfg(feature = "parallel")]
    {
        (0..problem.dataset.n()).into_par_iter().map(best).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..problem.dataset.n()).map(best).collect()
    }
}

/// Recomputes every center from its members: the centroid for k-means, or
/// the member minimizing the within-cluster cost for k-medians (ties toward
/// the lowest dataset id). Errors on an empty cluster.
pub fn center_step(
    problem: &ClusteringProblem,
    assignment: &[usize],
) -> Result<Vec<Vec<f64>>, Error> {
    let k = problem.k;
    let dim = problem.dataset.dim();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::DegenerateCluster { cluster: empty });
    }
    let center_of = |cluster: &Vec<usize>| match problem.mode {
        Mode::KMeans => {
            let mut c = vec![0.0; dim];
            for &i in cluster {
                for (d, v) in problem.dataset.point(i).iter().enumerate() {
                    c[d] += v;
                }
            }
            let inv = 1.0 / cluster.len() as f64;
            for v in &mut c {
                *v *= inv;
            }
            c
        }
        Mode::KMedians(dist) => {
            let mut best_id = cluster[0];
            let mut best_cost = f64::INFINITY;
            for &cand in cluster {
                let cp = problem.dataset.point(cand);
                let cost: f64 = cluster
                    .iter()
                    .map(|&i| dist.eval(problem.dataset.point(i), cp))
                    .sum();
                if cost < best_cost {
                    best_cost = cost;
                    best_id = cand;
                }
            }
            problem.dataset.point(best_id).to_vec()
        }
    };
    #[cfg(feature = "parallel")]
    {
        Ok(members.par_iter().map(center_of).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(members.iter().map(center_of).collect())
    }
}

/// Greedy assignment with empty-cluster repair: whenever a cluster ends up
/// empty, its center is replaced by the point currently paying the largest
/// assignment cost (lowest index on ties) and assignment reruns. Each
/// repair only adds a closer option for the moved point and removes a
/// center nobody used, so the total cost never increases. Gives up with a
/// degenerate-cluster error if repairs exceed `K + 1` (possible only with
/// heavily duplicated data).
fn assign_with_repair(
    problem: &ClusteringProblem,
    centers: &mut Vec<Vec<f64>>,
) -> Result<Vec<usize>, Error> {
    let mut repairs = 0usize;
    loop {
        let assignment = greedy_assign(problem, centers);
        let mut sizes = vec![0usize; problem.k];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return Ok(assignment);
        };
        repairs += 1;
        if repairs > problem.k + 1 {
            return Err(Error::DegenerateCluster { cluster: empty });
        }
        let mut worst = 0usize;
        let mut worst_cost = f64::NEG_INFINITY;
        for (i, &c) in assignment.iter().enumerate() {
            let cost = problem.point_cost(i, &centers[c]);
            if cost > worst_cost {
                worst_cost = cost;
                worst = i;
            }
        }
        centers[empty] = problem.dataset.point(worst).to_vec();
    }
}

/// Runs Lloyd's algorithm from a k-means++ seeding: alternate center
/// updates and greedy assignment until the assignment reaches a fixed
/// point or `max_iter` alternations pass. The returned assignment is always
/// a [`greedy_assign`] fixed point of the returned centers, and the cost is
/// non-increasing across iterations.
pub fn lloyd_run<R: Rng>(
    problem: &ClusteringProblem,
    rng: &mut R,
    max_iter: usize,
) -> Result<ClusteringSolution, Error> {
    let mut centers = init_centers(problem, rng)?;
    let mut assignment = assign_with_repair(problem, &mut centers)?;
    for _ in 0..max_iter {
        let mut new_centers = center_step(problem, &assignment)?;
        let new_assignment = assign_with_repair(problem, &mut new_centers)?;
        let converged = new_assignment == assignment;
        centers = new_centers;
        assignment = new_assignment;
        if converged {
            break;
        }
    }
    let cost = clustering_cost(&assignment, &centers, problem);
    Ok(ClusteringSolution { assignment, centers, y: None, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, Distance, GroupStructure, Mode};

    fn line_problem(mode: Mode) -> ClusteringProblem {
        let points = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let labels = ["a", "a", "a", "b", "b", "b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let groups = GroupStructure::from_labels(vec![("color".into(), labels)]).unwrap();
        ClusteringProblem::new(Dataset::new(points).unwrap(), groups, 2, mode).unwrap()
    }

    #[test]
    fn greedy_assignment_splits_line_at_midpoint() {
        let problem = line_problem(Mode::KMeans);
        let a = greedy_assign(&problem, &[vec![1.0], vec![11.0]]);
        assert_eq!(a, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn equidistant_point_takes_lower_cluster() {
        let problem = line_problem(Mode::KMeans);
        let a = greedy_assign(&problem, &[vec![2.0], vec![2.0]]);
        assert!(a.iter().all(|&c| c == 0));
    }

    #[test]
    fn kmeans_center_is_centroid() {
        let problem = line_problem(Mode::KMeans);
        let centers = center_step(&problem, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert_eq!(centers, vec![vec![1.0], vec![11.0]]);
    }

    #[test]
    fn kmedians_center_is_best_member() {
        let problem = line_problem(Mode::KMedians(Distance::Euclidean));
        let centers = center_step(&problem, &[0, 0, 0, 1, 1, 1]).unwrap();
        // Candidate 1 costs |0−1|+|2−1| = 2; endpoints cost 3.
        assert_eq!(centers, vec![vec![1.0], vec![11.0]]);
    }

    #[test]
    fn kmedians_cost_tie_takes_lower_id() {
        // Two points: both candidates cost the same; id 0 must win.
        let points = vec![vec![0.0], vec![4.0]];
        let labels = vec!["a".to_string(), "b".to_string()];
        let groups = GroupStructure::from_labels(vec![("g".into(), labels)]).unwrap();
        let problem = ClusteringProblem::new(
            Dataset::new(points).unwrap(),
            groups,
            1,
            Mode::KMedians(Distance::Euclidean),
        )
        .unwrap();
        let centers = center_step(&problem, &[0, 0]).unwrap();
        assert_eq!(centers, vec![vec![0.0]]);
    }

    #[test]
    fn empty_cluster_is_degenerate() {
        let problem = line_problem(Mode::KMeans);
        let err = center_step(&problem, &[0, 0, 0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateCluster { cluster: 1 }));
    }

    #[test]
    fn seeding_is_deterministic_and_k_equals_n_uses_all_points() {
        let problem = ClusteringProblem {
            k: 6,
            ..line_problem(Mode::KMeans)
        };
        let a = init_centers(&problem, &mut RngSeed(7).rng()).unwrap();
        let b = init_centers(&problem, &mut RngSeed(7).rng()).unwrap();
        assert_eq!(a, b);
        let mut xs: Vec<f64> = a.iter().map(|c| c[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn k_above_n_rejected() {
        let problem = ClusteringProblem {
            k: 7,
            ..line_problem(Mode::KMeans)
        };
        assert!(init_centers(&problem, &mut RngSeed(0).rng()).is_err());
    }

    #[test]
    fn lloyd_finds_separated_blob_partition() {
        let problem = line_problem(Mode::KMeans);
        let sol = lloyd_run(&problem, &mut RngSeed(11).rng(), DEFAULT_MAX_ITER).unwrap();
        // Within-blob SSE: each blob {0,1,2} around its centroid → 2.0.
        assert!((sol.cost - 4.0).abs() < 1e-9, "cost {}", sol.cost);
        assert_eq!(sol.assignment[0], sol.assignment[1]);
        assert_eq!(sol.assignment[3], sol.assignment[5]);
        assert_ne!(sol.assignment[0], sol.assignment[3]);
        // Fixed point of its own centers.
        assert_eq!(greedy_assign(&problem, &sol.centers), sol.assignment);
    }

    #[test]
    fn k_equals_n_reaches_zero_cost() {
        let problem = ClusteringProblem {
            k: 6,
            ..line_problem(Mode::KMeans)
        };
        let sol = lloyd_run(&problem, &mut RngSeed(3).rng(), DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn duplicate_heavy_data_with_k_equal_n_errors_cleanly() {
        // Four identical points, K = 4: only one distinct location exists,
        // so three clusters can never be filled.
        let points = vec![vec![5.0]; 4];
        let labels = vec!["a".into(), "a".into(), "b".into(), "b".into()];
        let groups = GroupStructure::from_labels(vec![("g".into(), labels)]).unwrap();
        let problem =
            ClusteringProblem::new(Dataset::new(points).unwrap(), groups, 4, Mode::KMeans)
                .unwrap();
        assert!(lloyd_run(&problem, &mut RngSeed(1).rng(), 50).is_err());
    }
}
