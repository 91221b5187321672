//! Fixed-center fair assignment models and their exact solution.
//!
//! With centers frozen, finding a minimum-cost MR-fair assignment is a
//! mixed-binary program over assignment variables `z_ik` (point `i` in
//! cluster `k`) and designation variables `y_gk` (cluster `k` counts toward
//! group `g`'s representation target). Three encodings are compiled here:
//!
//! * **FMRA** — both `z` and `y` binary: the exact fair assignment problem.
//! * **RAP** — `y` binary, `z` relaxed to `[0,1]`: cheap to solve, used to
//!   *choose* a representation pattern.
//! * **APFRC** — `y` fixed in advance and substituted out: designated
//!   `(g,k)` pairs become hard proportion rows, undesignated pairs drop
//!   entirely along with every big-M row.
//!
//! The representation row for a designated pair is
//! `Σ_{i∈X_g} z_ik ≥ α_g Σ_i z_ik`, linking a group's head count in a
//! cluster to the cluster's (variable) size. In big-M form the row is
//! relaxed by `M_g (1 − y_gk)` with the tightest licensed constant
//! `M_g = α_g · min(n, u)`.

use std::fmt;
use std::time::Duration;

use crate::error::Error;
use crate::lp::{
    solve_lp, solve_mbp_with_hint, LinearProgram, LpError, LpSolution, LpStatus,
    MixedBinaryProgram, RowSense,
};
use crate::model::{ClusteringProblem, FairnessSpec};

/// Which encoding to compile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    /// `z` and `y` binary.
    Fmra,
    /// `z` binary, `y` fixed and substituted out.
    Apfrc,
    /// `y` binary, `z` continuous.
    Rap,
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::Fmra => "FMRA",
            ModelVariant::Apfrc => "APFRC",
            ModelVariant::Rap => "RAP",
        })
    }
}

/// Big-M constant of one representation row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM(pub f64);

impl BigM {
    /// The tightest valid constant: `α · min(n, u)` — no cluster can exceed
    /// `min(n, u)` points, so the shortfall `α|C_k| − |C_k ∩ X_g|` never
    /// exceeds this.
    pub fn tightest(alpha: f64, n: usize, card_upper: usize) -> Self {
        BigM(alpha * n.min(card_upper) as f64)
    }
}

/// A compiled fixed-center model plus the metadata needed to interpret its
/// columns and to name an infeasibility.
#[derive(Debug, Clone)]
pub struct FmraModel {
    pub mbp: MixedBinaryProgram,
    pub variant: ModelVariant,
    pub n: usize,
    pub k: usize,
    /// `(group, cluster)` of each designation column, in column order;
    /// column id = `n·K + index`. Empty for APFRC.
    pub y_pairs: Vec<(usize, usize)>,
    /// For APFRC: the pattern that was substituted out.
    pub y_fixed: Option<Vec<Vec<bool>>>,
    alpha: Vec<f64>,
    beta: Vec<usize>,
    card: (usize, usize),
    n_groups: usize,
}

impl FmraModel {
    /// Column id of `z_ik`.
    pub fn z_col(&self, i: usize, k: usize) -> usize {
        i * self.k + k
    }

    /// Certificate naming this model's targets, for infeasible outcomes.
    pub fn certificate(&self) -> InfeasibleCertificate {
        InfeasibleCertificate {
            variant: self.variant,
            k: self.k,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            card_lower: self.card.0,
            card_upper: self.card.1,
        }
    }
}

/// Proof object for "no MR-fair assignment exists": the exact solve came
/// back infeasible for these targets.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleCertificate {
    pub variant: ModelVariant,
    pub k: usize,
    /// Per-group α.
    pub alpha: Vec<f64>,
    /// Per-group β.
    pub beta: Vec<usize>,
    pub card_lower: usize,
    pub card_upper: usize,
}

impl fmt::Display for InfeasibleCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no MR-fair assignment exists: K={}, α={:?}, β={:?}, cluster sizes in [{}, {}] ({} model)",
            self.k, self.alpha, self.beta, self.card_lower, self.card_upper, self.variant
        )
    }
}

/// The result of an exact fixed-center solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FairAssignment {
    pub values: AssignmentValues,
    /// Chosen (or passed-through) designation pattern, `y[g][k]`.
    pub y: Vec<Vec<bool>>,
    pub cost: f64,
}

/// Integral cluster ids, or the raw `z` block when `z` was relaxed.
#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentValues {
    Integral(Vec<usize>),
    /// Row-major `n × K`.
    Fractional(Vec<f64>),
}

impl FairAssignment {
    /// The integral assignment, if this solve produced one.
    pub fn assignment(&self) -> Option<&[usize]> {
        match &self.values {
            AssignmentValues::Integral(a) => Some(a),
            AssignmentValues::Fractional(_) => None,
        }
    }
}

/// Knobs for [`solve_exact`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions<'a> {
    pub time_limit: Option<Duration>,
    /// Existing assignment whose columns warm the root basis.
    pub warm_assignment: Option<&'a [usize]>,
}

fn check_centers(problem: &ClusteringProblem, centers: &[Vec<f64>]) -> Result<(), Error> {
    if centers.len() != problem.k {
        return Err(Error::invalid(format!(
            "expected {} centers, got {}",
            problem.k,
            centers.len()
        )));
    }
    for (k, c) in centers.iter().enumerate() {
        if c.len() != problem.dataset.dim() {
            return Err(Error::invalid(format!(
                "center {k} has dimension {}, dataset has {}",
                c.len(),
                problem.dataset.dim()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("center {k} has a non-finite coordinate")));
        }
    }
    Ok(())
}

/// Validates a fixed designation pattern against the spec: dimensions,
/// allowed pairs, the per-feature simultaneous-representation cap, and the
/// per-group targets.
fn check_y_fixed(
    y: &[Vec<bool>],
    problem: &ClusteringProblem,
    spec: &FairnessSpec,
) -> Result<(), Error> {
    let groups = &problem.groups;
    let k = problem.k;
    if y.len() != groups.n_groups() || y.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidPrefix(format!(
            "pattern must be {} groups × {} clusters",
            groups.n_groups(),
            k
        )));
    }
    for (g, row) in y.iter().enumerate() {
        let designated = row.iter().filter(|&&d| d).count();
        if designated < spec.beta[g] {
            return Err(Error::InvalidPrefix(format!(
                "group '{}' designated in {} clusters, below its target β = {}",
                groups.group_label(g),
                designated,
                spec.beta[g]
            )));
        }
        for (c, &d) in row.iter().enumerate() {
            if d && !spec.allows(g, c) {
                return Err(Error::InvalidPrefix(format!(
                    "pair (group '{}', cluster {c}) is outside the allowed set",
                    groups.group_label(g)
                )));
            }
        }
    }
    // No more groups of one feature may be designated together in a cluster
    // than can simultaneously hold an α share of it: Σ α_g ≤ 1 (which for
    // uniform α is the familiar ⌊1/α⌋ head-count cap).
    for f in 0..groups.n_features() {
        for c in 0..k {
            let mut alpha_sum = 0.0;
            let mut count = 0usize;
            for g in groups.groups_of_feature(f) {
                if y[g][c] {
                    alpha_sum += spec.alpha.for_group(g);
                    count += 1;
                }
            }
            if alpha_sum > 1.0 + 1e-9 {
                return Err(Error::InvalidPrefix(format!(
                    "cluster {c} designates {count} groups of feature '{}' whose α sum to {alpha_sum:.4} > 1",
                    groups.feature_name(f)
                )));
            }
        }
    }
    Ok(())
}

/// Compiles a fixed-center fair assignment model.
///
/// Layout: `z_ik` at column `i·K + k`, then one designation column per
/// allowed `(g,k)` pair of each group with a positive target (FMRA/RAP
/// only). Rows: one assignment equality per point; one representation row
/// per designation column (big-M form) or per fixed designated pair (hard
/// form, APFRC); one target row `Σ_k y_gk ≥ β_g` per group with β_g > 0;
/// and the cardinality window per cluster.
pub fn build_model(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
    variant: ModelVariant,
    y_fixed: Option<&[Vec<bool>]>,
) -> Result<FmraModel, Error> {
    check_centers(problem, centers)?;
    spec.validate_for(problem.k, &problem.groups)?;
    let groups = &problem.groups;
    let n = problem.dataset.n();
    let k = problem.k;
    let (lo, hi) = (spec.card_lower, spec.card_upper);

    let y_fixed = match (variant, y_fixed) {
        (ModelVariant::Apfrc, Some(y)) => {
            check_y_fixed(y, problem, spec)?;
            Some(y.to_vec())
        }
        (ModelVariant::Apfrc, None) => {
            return Err(Error::InvalidPrefix(
                "APFRC requires a fixed designation pattern".into(),
            ));
        }
        (_, Some(_)) => {
            return Err(Error::invalid(format!(
                "{variant} chooses its own designation pattern; do not pass one"
            )));
        }
        (_, None) => None,
    };

    let y_pairs: Vec<(usize, usize)> = if variant == ModelVariant::Apfrc {
        Vec::new()
    } else {
        (0..groups.n_groups())
            .filter(|&g| spec.beta[g] > 0)
            .flat_map(|g| (0..k).filter(move |&c| spec.allows(g, c)).map(move |c| (g, c)))
            .collect()
    };

    let n_z = n * k;
    let mut lp = LinearProgram::new(n_z + y_pairs.len());
    for i in 0..n {
        for c in 0..k {
            let col = i * k + c;
            lp.set_bounds(col, 0.0, 1.0);
            lp.set_objective(col, problem.point_cost(i, &centers[c]));
        }
    }
    for yc in 0..y_pairs.len() {
        lp.set_bounds(n_z + yc, 0.0, 1.0);
    }

    // Each point in exactly one cluster.
    for i in 0..n {
        lp.add_row(
            RowSense::Eq,
            1.0,
            (0..k).map(|c| (i * k + c, 1.0)).collect(),
        );
    }

    // Representation rows. The group's head count in cluster c must reach
    // an α_g share of the cluster size — hard when designated up front,
    // big-M-relaxed when the solver chooses y.
    let mut proportion_row = |g: usize, c: usize, big_m: Option<(usize, f64)>| {
        let alpha = spec.alpha.for_group(g);
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let a = if groups.is_member(g, i) { 1.0 - alpha } else { -alpha };
            coeffs.push((i * k + c, a));
        }
        match big_m {
            None => lp.add_row(RowSense::Ge, 0.0, coeffs),
            Some((y_col, m)) => {
                coeffs.push((y_col, -m));
                lp.add_row(RowSense::Ge, -m, coeffs);
            }
        }
    };
    match variant {
        ModelVariant::Apfrc => {
            let y = y_fixed.as_ref().unwrap();
            for g in 0..groups.n_groups() {
                for c in 0..k {
                    if y[g][c] {
                        proportion_row(g, c, None);
                    }
                }
            }
        }
        ModelVariant::Fmra | ModelVariant::Rap => {
            for (yc, &(g, c)) in y_pairs.iter().enumerate() {
                let m = BigM::tightest(spec.alpha.for_group(g), n, hi).0;
                proportion_row(g, c, Some((n_z + yc, m)));
            }
        }
    }

    // Per-group representation targets over the chosen pattern.
    if variant != ModelVariant::Apfrc {
        for g in 0..groups.n_groups() {
            if spec.beta[g] == 0 {
                continue;
            }
            let coeffs: Vec<(usize, f64)> = y_pairs
                .iter()
                .enumerate()
                .filter(|(_, &(pg, _))| pg == g)
                .map(|(yc, _)| (n_z + yc, 1.0))
                .collect();
            lp.add_row(RowSense::Ge, spec.beta[g] as f64, coeffs);
        }
    }

    // Cardinality window per cluster.
    for c in 0..k {
        let col_sum: Vec<(usize, f64)> = (0..n).map(|i| (i * k + c, 1.0)).collect();
        lp.add_row(RowSense::Ge, lo as f64, col_sum.clone());
        if hi < n {
            lp.add_row(RowSense::Le, hi as f64, col_sum);
        }
    }

    let binary: Vec<usize> = match variant {
        ModelVariant::Fmra => (0..n_z + y_pairs.len()).collect(),
        ModelVariant::Apfrc => (0..n_z).collect(),
        ModelVariant::Rap => (n_z..n_z + y_pairs.len()).collect(),
    };
    let mbp = MixedBinaryProgram::new(lp, binary).map_err(lp_error)?;

    let alpha: Vec<f64> = (0..groups.n_groups()).map(|g| spec.alpha.for_group(g)).collect();
    Ok(FmraModel {
        mbp,
        variant,
        n,
        k,
        y_pairs,
        y_fixed,
        alpha,
        beta: spec.beta.clone(),
        card: (lo, hi),
        n_groups: groups.n_groups(),
    })
}

fn lp_error(e: LpError) -> Error {
    match e {
        LpError::Invalid(msg) => Error::InvalidArgument(msg),
        LpError::Numerical(msg) => Error::NumericalFailure(msg),
        LpError::TimeLimit { .. } => Error::TimeLimit { incumbent: None },
    }
}

/// Interprets an integral-in-the-flagged-variables solution of `model`.
fn extract_fair(model: &FmraModel, sol: &LpSolution) -> FairAssignment {
    let values = match model.variant {
        ModelVariant::Rap => {
            AssignmentValues::Fractional(sol.values[..model.n * model.k].to_vec())
        }
        _ => {
            let mut assignment = vec![0usize; model.n];
            for (i, slot) in assignment.iter_mut().enumerate() {
                *slot = (0..model.k)
                    .max_by(|&a, &b| {
                        sol.values[model.z_col(i, a)].total_cmp(&sol.values[model.z_col(i, b)])
                    })
                    .unwrap();
            }
            AssignmentValues::Integral(assignment)
        }
    };
    let y = match &model.y_fixed {
        Some(y) => y.clone(),
        None => {
            let mut y = vec![vec![false; model.k]; model.n_groups];
            for (yc, &(g, c)) in model.y_pairs.iter().enumerate() {
                if sol.values[model.n * model.k + yc] > 0.5 {
                    y[g][c] = true;
                }
            }
            y
        }
    };
    FairAssignment { values, y, cost: sol.objective }
}

/// Solves a fixed-center model exactly.
///
/// FMRA and APFRC return integral assignments; RAP returns an integral
/// designation pattern with a fractional `z` block. An infeasible model
/// becomes [`Error::Infeasible`] carrying a certificate that names the
/// targets; a solver deadline becomes [`Error::TimeLimit`] carrying the
/// best fair assignment found, if any.
pub fn solve_exact(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
    variant: ModelVariant,
    y_fixed: Option<&[Vec<bool>]>,
    opts: SolveOptions<'_>,
) -> Result<FairAssignment, Error> {
    let model = build_model(problem, centers, spec, variant, y_fixed)?;
    let hint: Option<Vec<usize>> = opts.warm_assignment.map(|a| {
        debug_assert_eq!(a.len(), model.n);
        a.iter().enumerate().map(|(i, &c)| model.z_col(i, c)).collect()
    });
    let sol = solve_mbp_with_hint(&model.mbp, opts.time_limit, hint.as_deref());
    match sol {
        Ok(sol) => match sol.status {
            LpStatus::Optimal => Ok(extract_fair(&model, &sol)),
            LpStatus::Infeasible => Err(Error::Infeasible(Box::new(model.certificate()))),
            LpStatus::Unbounded => Err(Error::NumericalFailure(
                "fixed-center model reported unbounded".into(),
            )),
        },
        Err(LpError::TimeLimit { incumbent }) => Err(Error::TimeLimit {
            incumbent: incumbent.map(|s| Box::new(extract_fair(&model, &s))),
        }),
        Err(e) => Err(lp_error(e)),
    }
}

/// Solves the LP relaxation of a compiled model (all binary flags dropped)
/// to a basic optimal solution.
pub fn lp_relax_solve(model: &FmraModel) -> Result<LpSolution, Error> {
    let sol = solve_lp(&model.mbp.lp).map_err(lp_error)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::Infeasible(Box::new(model.certificate()))),
        LpStatus::Unbounded => Err(Error::NumericalFailure(
            "relaxation reported unbounded over a bounded box".into(),
        )),
    }
}
