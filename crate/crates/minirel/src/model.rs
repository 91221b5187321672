//! Clustering data model: datasets, protected-group structure, fairness
//! targets, and solutions.
//!
//! A point set lives in a [`Dataset`]; one or more sensitive features each
//! partition the points into named groups ([`GroupStructure`]). A
//! [`FairnessSpec`] fixes the representation threshold `α`, the per-group
//! cluster quotas `β_g`, and cluster cardinality bounds `[l, u]`. A group is
//! *α-represented* in a nonempty cluster when it holds at least an `α`
//! fraction of the cluster's points, and a clustering is *MR-fair* when each
//! group is α-represented in at least `β_g` clusters.

use std::collections::BTreeSet;

use crate::error::Error;

/// An `n × dim` point set with stable ids `0..n` defining lexicographic
/// order for every tie-breaking rule in the crate.
///
/// Coordinates are stored flat and row-major.
///
/// # Examples
///
/// ```
/// let ds = minirel::Dataset::new(vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
/// assert_eq!(ds.n(), 2);
/// assert_eq!(ds.point(1), &[2.0, 3.0]);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset from per-point coordinate vectors.
    ///
    /// Errors if the point list is empty, dimensions disagree, or any
    /// coordinate is non-finite.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, Error> {
        if points.is_empty() {
            return Err(Error::invalid("dataset must contain at least one point"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has dimension {} but point 0 has dimension {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim)
    }

    /// Builds a dataset from a flat row-major coordinate buffer.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self, Error> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(
                "flat coordinate buffer length must be a positive multiple of dim",
            ));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        let n = coords.len() / dim;
        Ok(Dataset { coords, n, dim })
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coordinate dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Sensitive features and the groups they partition the dataset into.
///
/// Each feature partitions all `n` points into at least two named groups.
/// Groups carry *global* ids, contiguous per feature in feature order, so a
/// single index addresses any group across features. Groups from different
/// features may overlap; groups within one feature never do.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    n: usize,
    feature_names: Vec<String>,
    group_names: Vec<String>,
    /// Global group-id range per feature: groups of feature `f` are
    /// `feature_start[f]..feature_start[f + 1]`.
    feature_start: Vec<usize>,
    /// `point_group[f][i]` = global id of the feature-`f` group of point `i`.
    point_group: Vec<Vec<usize>>,
    /// Sorted member ids per global group.
    members: Vec<Vec<usize>>,
}

impl GroupStructure {
    /// Builds the structure from per-feature label vectors (`labels.len() ==
    /// n` for every feature). Group ids within a feature follow sorted label
    /// order, so identical inputs always produce identical ids.
    ///
    /// Errors if features are empty, lengths disagree, or any feature has
    /// fewer than two distinct labels (a single-group feature constrains
    /// nothing and almost always indicates a data-loading bug).
    pub fn from_labels(features: Vec<(String, Vec<String>)>) -> Result<Self, Error> {
        if features.is_empty() {
            return Err(Error::invalid("at least one sensitive feature is required"));
        }
        let n = features[0].1.len();
        if n == 0 {
            return Err(Error::invalid("feature label vectors must be nonempty"));
        }
        let mut feature_names = Vec::new();
        let mut group_names = Vec::new();
        let mut feature_start = vec![0usize];
        let mut point_group = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();

        for (fname, labels) in &features {
            if labels.len() != n {
                return Err(Error::invalid(format!(
                    "feature {fname:?} has {} labels but expected {n}",
                    labels.len()
                )));
            }
            let distinct: BTreeSet<&String> = labels.iter().collect();
            if distinct.len() < 2 {
                return Err(Error::invalid(format!(
                    "feature {fname:?} has {} distinct label(s); need at least 2",
                    distinct.len()
                )));
            }
            let base = group_names.len();
            let order: Vec<&String> = distinct.into_iter().collect();
            let mut pg = vec![0usize; n];
            members.resize(base + order.len(), Vec::new());
            for (i, label) in labels.iter().enumerate() {
                let local = order.binary_search(&label).expect("label in distinct set");
                pg[i] = base + local;
                members[base + local].push(i);
            }
            for name in order {
                group_names.push(name.clone());
            }
            feature_names.push(fname.clone());
            feature_start.push(group_names.len());
            point_group.push(pg);
        }

        Ok(GroupStructure {
            n,
            feature_names,
            group_names,
            feature_start,
            point_group,
            members,
        })
    }

    /// Number of points covered (matches the dataset's `n`).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sensitive features.
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Total number of groups across all features.
    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    /// Global group-id range of feature `f`.
    pub fn groups_of_feature(&self, f: usize) -> std::ops::Range<usize> {
        self.feature_start[f]..self.feature_start[f + 1]
    }

    /// Feature owning global group `g`.
    pub fn feature_of(&self, g: usize) -> usize {
        // feature_start is sorted; at most a handful of features, scan is fine.
        (0..self.n_features())
            .find(|&f| self.groups_of_feature(f).contains(&g))
            .expect("group id out of range")
    }

    /// Sorted point ids belonging to global group `g`.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    /// `|X_g|`.
    pub fn group_size(&self, g: usize) -> usize {
        self.members[g].len()
    }

    /// Global group id of point `i` under feature `f`.
    pub fn group_of_point(&self, f: usize, i: usize) -> usize {
        self.point_group[f][i]
    }

    /// Whether point `i` belongs to global group `g`.
    pub fn is_member(&self, g: usize, i: usize) -> bool {
        self.point_group[self.feature_of(g)][i] == g
    }

    /// Feature name.
    pub fn feature_name(&self, f: usize) -> &str {
        &self.feature_names[f]
    }

    /// Group label (unqualified).
    pub fn group_name(&self, g: usize) -> &str {
        &self.group_names[g]
    }

    /// Qualified `feature=group` label for messages and reports.
    pub fn group_label(&self, g: usize) -> String {
        format!("{}={}", self.feature_names[self.feature_of(g)], self.group_names[g])
    }

    /// Looks up a global group id from a `feature=group` label.
    pub fn group_by_label(&self, label: &str) -> Option<usize> {
        let (fname, gname) = label.split_once('=')?;
        let f = self.feature_names.iter().position(|x| x == fname)?;
        self.groups_of_feature(f).find(|&g| self.group_names[g] == gname)
    }
}

/// Representation threshold: one scalar for all groups (the common case) or
/// one value per global group id.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Uniform(f64),
    PerGroup(Vec<f64>),
}

impl Alpha {
    /// Threshold applying to group `g`.
    pub fn for_group(&self, g: usize) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerGroup(v) => v[g],
        }
    }

    /// Largest threshold over the given group range.
    pub fn max_over(&self, groups: std::ops::Range<usize>) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerGroup(v) => groups.map(|g| v[g]).fold(f64::MIN, f64::max),
        }
    }

    fn validate(&self, n_groups: usize) -> Result<(), Error> {
        let check = |a: f64| {
            if a.is_finite() && a > 0.0 && a <= 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("alpha must lie in (0, 1], got {a}")))
            }
        };
        match self {
            Alpha::Uniform(a) => check(*a),
            Alpha::PerGroup(v) => {
                if v.len() != n_groups {
                    return Err(Error::invalid(format!(
                        "per-group alpha has {} entries for {n_groups} groups",
                        v.len()
                    )));
                }
                v.iter().try_for_each(|&a| check(a))
            }
        }
    }
}

/// Largest integer `t ≥ 0` with `t·α ≤ 1`, computed with a small relative
/// slack so floating-point noise cannot shave off the exact case (naive
/// `floor(1/0.2)` yields 4; the correct value is 5).
pub fn floor_recip(alpha: f64) -> usize {
    let mut t = (1.0 / alpha).floor() as i64;
    while (t + 1) as f64 * alpha <= 1.0 + 1e-9 {
        t += 1;
    }
    while t > 0 && t as f64 * alpha > 1.0 + 1e-9 {
        t -= 1;
    }
    t.max(0) as usize
}

/// Smallest integer `t ≥ 1` with `t·α ≥ 1`, with the same slack policy as
/// [`floor_recip`].
pub fn ceil_recip(alpha: f64) -> usize {
    let mut t = (1.0 / alpha).ceil() as i64;
    while t > 1 && (t - 1) as f64 * alpha >= 1.0 - 1e-9 {
        t -= 1;
    }
    while (t as f64) * alpha < 1.0 - 1e-9 {
        t += 1;
    }
    t.max(1) as usize
}

/// How the per-group cluster quotas `β_g` are derived.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPolicy {
    /// Equal quotas: `β_g = ⌊⌊1/α⌋·K / |G_f|⌋`, the same for every group of
    /// a feature regardless of group size.
    StatisticalParity,
    /// Size-proportional quotas: `β_g = ⌊(|X_g|/n)·⌊1/α⌋·K⌋`.
    EqualOpportunity,
    /// Caller-supplied quotas per global group id (clamped to `K` like the
    /// derived policies).
    Custom(Vec<usize>),
}

/// Derives the per-group cluster quotas `β_g` under a policy.
///
/// All policies clamp to `β_g ≤ K`. Quota arithmetic is exact integer math
/// once `⌊1/α⌋` is extracted robustly.
///
/// # Examples
///
/// ```
/// use minirel::{compute_beta, Alpha, BetaPolicy, GroupStructure};
/// let groups = GroupStructure::from_labels(vec![(
///     "sex".into(),
///     ["a", "a", "b"].iter().map(|s| s.to_string()).collect(),
/// )])
/// .unwrap();
/// let beta = compute_beta(
///     &BetaPolicy::StatisticalParity,
///     &Alpha::Uniform(0.51),
///     10,
///     &groups,
/// );
/// assert_eq!(beta, vec![5, 5]);
/// ```
pub fn compute_beta(
    policy: &BetaPolicy,
    alpha: &Alpha,
    k: usize,
    groups: &GroupStructure,
) -> Vec<usize> {
    let n = groups.n();
    let mut beta = vec![0usize; groups.n_groups()];
    match policy {
        BetaPolicy::Custom(user) => {
            for g in 0..groups.n_groups() {
                beta[g] = user.get(g).copied().unwrap_or(0).min(k);
            }
        }
        BetaPolicy::StatisticalParity => {
            for f in 0..groups.n_features() {
                let range = groups.groups_of_feature(f);
                let g_count = range.len();
                for g in range {
                    let t = floor_recip(alpha.for_group(g));
                    beta[g] = (t * k / g_count).min(k);
                }
            }
        }
        BetaPolicy::EqualOpportunity => {
            for g in 0..groups.n_groups() {
                let t = floor_recip(alpha.for_group(g));
                beta[g] = (groups.group_size(g) * t * k / n).min(k);
            }
        }
    }
    beta
}

/// Fairness targets: threshold `α`, quotas `β_g`, cardinality window
/// `[l, u]`, and optionally a restriction of which (group, cluster) pairs
/// may carry a representation constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessSpec {
    pub alpha: Alpha,
    /// Quota per global group id.
    pub beta: Vec<usize>,
    /// Cluster cardinality lower bound `l ≥ 1` (nonempty clusters; an empty
    /// cluster never counts as representing anyone).
    pub card_lower: usize,
    /// Cluster cardinality upper bound `u`.
    pub card_upper: usize,
    /// When `Some`, only these (group, cluster) pairs may be chosen for
    /// representation; `None` allows every pair.
    pub allowed_pairs: Option<BTreeSet<(usize, usize)>>,
}

impl FairnessSpec {
    /// Builds and validates a spec: `α ∈ (0,1]` per group, `1 ≤ l ≤ u`.
    pub fn new(
        alpha: Alpha,
        beta: Vec<usize>,
        card_lower: usize,
        card_upper: usize,
    ) -> Result<Self, Error> {
        alpha.validate(beta.len())?;
        if card_lower < 1 || card_lower > card_upper {
            return Err(Error::invalid(format!(
                "cardinality bounds must satisfy 1 ≤ l ≤ u, got l={card_lower}, u={card_upper}"
            )));
        }
        Ok(FairnessSpec {
            alpha,
            beta,
            card_lower,
            card_upper,
            allowed_pairs: None,
        })
    }

    /// A vacuous spec (`β = 0`, `l = 1`, `u = n`): every clustering with
    /// nonempty clusters is fair under it.
    pub fn unconstrained(n_groups: usize, n: usize) -> Self {
        FairnessSpec {
            alpha: Alpha::Uniform(1.0),
            beta: vec![0; n_groups],
            card_lower: 1,
            card_upper: n,
            allowed_pairs: None,
        }
    }

    /// Checks compatibility with a concrete problem: quota vector length,
    /// `β_g ≤ K`, `u ≤ n`, and `l·K ≤ n` (otherwise no assignment can give
    /// every cluster its minimum).
    pub fn validate_for(&self, k: usize, groups: &GroupStructure) -> Result<(), Error> {
        if self.beta.len() != groups.n_groups() {
            return Err(Error::invalid(format!(
                "beta has {} entries for {} groups",
                self.beta.len(),
                groups.n_groups()
            )));
        }
        if let Some(&bad) = self.beta.iter().find(|&&b| b > k) {
            return Err(Error::invalid(format!("beta value {bad} exceeds K={k}")));
        }
        if self.card_upper > groups.n() {
            return Err(Error::invalid(format!(
                "cardinality upper bound {} exceeds n={}",
                self.card_upper,
                groups.n()
            )));
        }
        if self.card_lower * k > groups.n() {
            return Err(Error::invalid(format!(
                "cardinality lower bound {} infeasible: l·K > n",
                self.card_lower
            )));
        }
        Ok(())
    }

    /// Whether pair `(g, k)` may carry a representation constraint.
    pub fn allows(&self, g: usize, k: usize) -> bool {
        match &self.allowed_pairs {
            None => true,
            Some(set) => set.contains(&(g, k)),
        }
    }
}

/// Distance choice for k-medians mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    SquaredEuclidean,
    Euclidean,
    Manhattan,
}

impl Distance {
    pub fn eval(self, x: &[f64], c: &[f64]) -> f64 {
        match self {
            Distance::SquaredEuclidean => {
                x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
            }
            Distance::Euclidean => x
                .iter()
                .zip(c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Distance::Manhattan => x.iter().zip(c).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

/// Clustering objective family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Centers are centroids; cost is squared Euclidean distance.
    KMeans,
    /// Centers are data points of the cluster; pluggable distance.
    KMedians(Distance),
}

/// A clustering instance: points, group structure, cluster count, and
/// objective.
#[derive(Debug, Clone)]
pub struct ClusteringProblem {
    pub dataset: Dataset,
    pub groups: GroupStructure,
    pub k: usize,
    pub mode: Mode,
}

impl ClusteringProblem {
    pub fn new(
        dataset: Dataset,
        groups: GroupStructure,
        k: usize,
        mode: Mode,
    ) -> Result<Self, Error> {
        if groups.n() != dataset.n() {
            return Err(Error::invalid(format!(
                "group structure covers {} points but dataset has {}",
                groups.n(),
                dataset.n()
            )));
        }
        if k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        Ok(ClusteringProblem {
            dataset,
            groups,
            k,
            mode,
        })
    }

    /// Assignment cost `D(x, c)` between a point and a center.
    pub fn distance(&self, x: &[f64], c: &[f64]) -> f64 {
        match self.mode {
            Mode::KMeans => Distance::SquaredEuclidean.eval(x, c),
            Mode::KMedians(d) => d.eval(x, c),
        }
    }

    /// `D(x_i, c)` by point id.
    pub fn point_cost(&self, i: usize, center: &[f64]) -> f64 {
        self.distance(self.dataset.point(i), center)
    }
}

/// A (hard) clustering: per-point cluster ids, centers, the representation
/// pattern `y` when one was chosen by a fair solver, and the total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSolution {
    /// `assignment[i]` = cluster of point `i`.
    pub assignment: Vec<usize>,
    /// `K` centers (in k-medians mode each is a data point of its cluster).
    pub centers: Vec<Vec<f64>>,
    /// `y[g][k]` = whether cluster `k` was designated to represent group
    /// `g`. `None` for baselines that never chose a pattern.
    pub y: Option<Vec<Vec<bool>>>,
    /// Total assignment cost `Σ_i D(x_i, c_{assignment[i]})`.
    pub cost: f64,
}

impl ClusteringSolution {
    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Sorted member ids of cluster `k`.
    pub fn cluster_members(&self, k: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == k)
            .collect()
    }

    /// `|C_k|` for every cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}
