//! Bundled synthetic instances, so tests and demos need no external data.
//!
//! Three families:
//! * [`skewed_blobs`] — well-separated Gaussian blobs whose group mix is
//!   skewed per blob, the workhorse for fairness experiments (an unfair
//!   clustering recovers the blobs and concentrates each group).
//! * [`theorem_gap_instance`] — the four-point instance showing that
//!   fairly reassigning points to *fixed* unconstrained-optimal centers
//!   can cost arbitrarily more than letting the centers move.
//! * [`six_point_line`] — a tiny line instance whose unconstrained
//!   optimum is already fair, handy for exactness and parity checks.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Error;
use crate::model::{
    Alpha, ClusteringProblem, Dataset, FairnessSpec, GroupStructure, Mode,
};

/// Shape of a [`skewed_blobs`] draw.
#[derive(Debug, Clone)]
pub struct BlobConfig {
    /// Number of blobs (cluster structure of the geometry).
    pub blobs: usize,
    /// Points drawn per blob.
    pub per_blob: usize,
    /// Ambient dimension.
    pub dim: usize,
    /// Number of sensitive groups (single feature named `group`).
    pub n_groups: usize,
    /// Probability that a point takes its blob's dominant group; the rest
    /// is spread uniformly over the remaining groups. `1/n_groups` gives
    /// no skew, `1.0` gives perfectly segregated blobs.
    pub skew: f64,
    /// Distance between consecutive blob centers along the first axis.
    pub separation: f64,
    /// Standard deviation of each blob.
    pub spread: f64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            blobs: 3,
            per_blob: 60,
            dim: 2,
            n_groups: 2,
            skew: 0.85,
            separation: 10.0,
            spread: 1.0,
        }
    }
}

/// Draws separable blobs with per-blob group skew. Blob `j`'s dominant
/// group is `j mod n_groups`, so dominance rotates across blobs and every
/// group dominates somewhere when `blobs ≥ n_groups`. Deterministic given
/// the RNG state.
pub fn skewed_blobs<R: Rng>(
    config: &BlobConfig,
    rng: &mut R,
) -> Result<(Dataset, GroupStructure), Error> {
    if config.blobs == 0 || config.per_blob == 0 || config.dim == 0 {
        return Err(Error::invalid("blobs, per_blob, and dim must be positive"));
    }
    if config.n_groups < 2 {
        return Err(Error::invalid("need at least two groups"));
    }
    if !(0.0..=1.0).contains(&config.skew) {
        return Err(Error::invalid("skew must lie in [0, 1]"));
    }
    if !(config.separation > 0.0) || !(config.spread > 0.0) {
        return Err(Error::invalid("separation and spread must be positive"));
    }
    let noise = Normal::new(0.0, config.spread)
        .map_err(|e| Error::invalid(format!("bad spread: {e}")))?;

    let n = config.blobs * config.per_blob;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for blob in 0..config.blobs {
        let dominant = blob % config.n_groups;
        for _ in 0..config.per_blob {
            let mut p = vec![0.0; config.dim];
            p[0] = blob as f64 * config.separation;
            for coord in p.iter_mut() {
                *coord += noise.sample(rng);
            }
            points.push(p);
            let g = if rng.gen::<f64>() < config.skew {
                dominant
            } else {
                // Uniform over the other groups, skipping the dominant id.
                let r = rng.gen_range(0..config.n_groups - 1);
                if r >= dominant {
                    r + 1
                } else {
                    r
                }
            };
            labels.push(format!("g{g}"));
        }
    }
    let dataset = Dataset::new(points)?;
    let groups = GroupStructure::from_labels(vec![("group".to_string(), labels)])?;
    Ok((dataset, groups))
}

/// The center-adjustment gap instance: two co-located points of singleton
/// groups at the origin and a pair of third-group points at `(gap, 0)` and
/// `(gap, eps)`, with `K = 3` and every group demanding one majority
/// cluster. Fairly reassigning to the unconstrained-optimal centers costs
/// `gap² + eps²`, while moving centers costs `eps²/2` — the ratio grows
/// without bound in `gap/eps`. Returns the problem and the canonical
/// targets (`α = 0.51`, one cluster per group).
pub fn theorem_gap_instance(gap: f64, eps: f64) -> (ClusteringProblem, FairnessSpec) {
    assert!(gap > 0.0 && eps > 0.0, "gap and eps must be positive");
    let points = vec![
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![gap, 0.0],
        vec![gap, eps],
    ];
    let labels = ["a", "b", "c", "c"].iter().map(|s| s.to_string()).collect();
    let groups =
        GroupStructure::from_labels(vec![("group".to_string(), labels)]).expect("static");
    let problem =
        ClusteringProblem::new(Dataset::new(points).expect("static"), groups, 3, Mode::KMeans)
            .expect("static");
    let spec = FairnessSpec::new(Alpha::Uniform(0.51), vec![1, 1, 1], 1, 4).expect("static");
    (problem, spec)
}

/// Six points on a line in two well-separated triples, each triple one
/// group, `K = 2`. The unconstrained optimum (split between the triples,
/// cost 4) already gives each group a majority cluster, so the fair
/// optimum coincides with it.
pub fn six_point_line() -> (ClusteringProblem, FairnessSpec) {
    let points = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0]
        .iter()
        .map(|&x| vec![x])
        .collect();
    let labels = ["a", "a", "a", "b", "b", "b"].iter().map(|s| s.to_string()).collect();
    let groups =
        GroupStructure::from_labels(vec![("group".to_string(), labels)]).expect("static");
    let problem =
        ClusteringProblem::new(Dataset::new(points).expect("static"), groups, 2, Mode::KMeans)
            .expect("static");
    let spec = FairnessSpec::new(Alpha::Uniform(0.51), vec![1, 1], 1, 6).expect("static");
    (problem, spec)
}
