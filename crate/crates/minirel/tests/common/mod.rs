//! Shared test support: independent oracles the engine under test is
//! compared against.
//!
//! Nothing here calls into `minirel::lp`'s solver paths: the tableau
//! simplex below is a separate textbook implementation (dense tableau,
//! two-phase, Bland's rule), and the enumerators are plain brute force.
//! They are deliberately slow and simple — correctness references, not
//! production code.

#![allow(dead_code)]

use minirel::lp::{LinearProgram, MixedBinaryProgram, RowSense};
use minirel::model::{ClusteringProblem, FairnessSpec, GroupStructure};
use rand::Rng;

// ---------------------------------------------------------------------------
// Dense two-phase tableau simplex (oracle)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub objective: f64,
    pub values: Vec<f64>,
}

/// How an original variable maps into the nonnegative standard-form space.
#[derive(Debug, Clone, Copy)]
enum Sub {
    /// `x = shift + p`
    Shift(usize, f64),
    /// `x = shift − p`
    Neg(usize, f64),
    /// `x = p − q`
    Split(usize, usize),
}

/// Solves an LP with a dense two-phase tableau simplex under Bland's rule.
/// Exponentially slower than the engine under test but independently
/// correct; use only on small models.
pub fn tableau_solve(lp: &LinearProgram) -> OracleResult {
    let n = lp.n_vars();
    // --- 1. substitute bounded variables into nonnegative ones -----------
    let mut subs = Vec::with_capacity(n);
    let mut n_std = 0usize;
    // Upper bounds of doubly bounded vars become rows directly in the
    // standard space: (standard var p, rhs = hi − lo).
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            let p = n_std;
            n_std += 1;
            subs.push(Sub::Shift(p, lo));
            if hi.is_finite() {
                extra_rows.push((p, hi - lo));
            }
        } else if hi.is_finite() {
            let p = n_std;
            n_std += 1;
            subs.push(Sub::Neg(p, hi));
        } else {
            let p = n_std;
            let q = n_std + 1;
            n_std += 2;
            subs.push(Sub::Split(p, q));
        }
    }

    // --- 2. rewrite rows over standard vars, make rhs nonnegative --------
    let mut std_rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
    let mut push_row = |coeffs: &[(usize, f64)], sense: RowSense, rhs: f64| {
        let mut dense = vec![0.0; n_std];
        let mut b = rhs;
        for &(j, v) in coeffs {
            match subs[j] {
                Sub::Shift(p, lo) => {
                    dense[p] += v;
                    b -= v * lo;
                }
                Sub::Neg(p, hi) => {
                    dense[p] -= v;
                    b -= v * hi;
                }
                Sub::Split(p, q) => {
                    dense[p] += v;
                    dense[q] -= v;
                }
            }
        }
        let mut sense = sense;
        if b < 0.0 {
            for d in dense.iter_mut() {
                *d = -*d;
            }
            b = -b;
            sense = match sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
        std_rows.push((dense, sense, b));
    };
    for row in &lp.rows {
        push_row(&row.coeffs, row.sense, row.rhs);
    }
    for &(p, ub) in &extra_rows {
        // Already in standard space; must not pass through `subs` again.
        let mut dense = vec![0.0; n_std];
        dense[p] = 1.0;
        std_rows.push((dense, RowSense::Le, ub));
    }

    // --- 3. slacks / artificials -----------------------------------------
    let m = std_rows.len();
    let mut total_cols = n_std;
    // (column index of slack or artificial, is_artificial)
    let mut row_aux: Vec<(Option<usize>, Option<usize>)> = Vec::new(); // (slack, artificial)
    for (_, sense, _) in &std_rows {
        let mut slack = None;
        let mut art = None;
        match sense {
            RowSense::Le => {
                slack = Some(total_cols);
                total_cols += 1;
            }
            RowSense::Ge => {
                slack = Some(total_cols);
                art = Some(total_cols + 1);
                total_cols += 2;
            }
            RowSense::Eq => {
                art = Some(total_cols);
                total_cols += 1;
            }
        }
        row_aux.push((slack, art));
    }

    let mut tab = vec![vec![0.0; total_cols + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut is_artificial = vec![false; total_cols];
    for (i, (dense, sense, b)) in std_rows.iter().enumerate() {
        tab[i][..n_std].copy_from_slice(dense);
        tab[i][total_cols] = *b;
        let (slack, art) = row_aux[i];
        if let Some(s) = slack {
            tab[i][s] = if *sense == RowSense::Ge { -1.0 } else { 1.0 };
        }
        if let Some(a) = art {
            tab[i][a] = 1.0;
            is_artificial[a] = true;
            basis[i] = a;
        } else {
            basis[i] = slack.expect("Le row has slack");
        }
    }

    let pivot = |tab: &mut Vec<Vec<f64>>, cost: &mut Vec<f64>, basis: &mut Vec<usize>, r: usize, c: usize| {
        let piv = tab[r][c];
        for v in tab[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..tab.len() {
            if i != r && tab[i][c].abs() > 1e-12 {
                let factor = tab[i][c];
                for j in 0..tab[i].len() {
                    tab[i][j] -= factor * tab[r][j];
                }
            }
        }
        if cost[c].abs() > 1e-12 {
            let factor = cost[c];
            for j in 0..cost.len() {
                cost[j] -= factor * tab[r][j];
            }
        }
        basis[r] = c;
    };

    // Bland's rule phase loop; returns false on unbounded.
    let run = |tab: &mut Vec<Vec<f64>>,
               cost: &mut Vec<f64>,
               basis: &mut Vec<usize>,
               allowed: &dyn Fn(usize) -> bool|
     -> bool {
        loop {
            let enter = (0..total_cols).find(|&j| allowed(j) && cost[j] < -1e-9);
            let Some(e) = enter else { return true };
            let mut best: Option<(f64, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..tab.len() {
                if tab[i][e] > 1e-9 {
                    let ratio = tab[i][total_cols] / tab[i][e];
                    let key = (ratio, basis[i], i);
                    if best.map_or(true, |(br, bv, _)| {
                        ratio < br - 1e-12 || (ratio < br + 1e-12 && basis[i] < bv)
                    }) {
                        best = Some(key);
                    }
                }
            }
            let Some((_, _, r)) = best else { return false };
            pivot(tab, cost, basis, r, e);
        }
    };

    // --- 4. phase 1 -------------------------------------------------------
    let mut cost1 = vec![0.0; total_cols + 1];
    for j in 0..total_cols {
        if is_artificial[j] {
            cost1[j] = 1.0;
        }
    }
    // zero out the basic artificial columns
    for i in 0..m {
        if is_artificial[basis[i]] {
            for j in 0..=total_cols {
                cost1[j] -= tab[i][j];
            }
        }
    }
    if !run(&mut tab, &mut cost1, &mut basis, &|_| true) {
        // Phase-1 objective is bounded below by 0; unbounded here means a bug.
        panic!("phase 1 unbounded in tableau oracle");
    }
    let infeas: f64 = -cost1[total_cols];
    if infeas > 1e-7 {
        return OracleResult {
            status: OracleStatus::Infeasible,
            objective: f64::NAN,
            values: vec![0.0; n],
        };
    }
    // Drive artificials out of the basis where possible.
    for i in 0..m {
        if is_artificial[basis[i]] {
            if let Some(c) = (0..total_cols).find(|&j| !is_artificial[j] && tab[i][j].abs() > 1e-7)
            {
                let mut dummy = vec![0.0; total_cols + 1];
                pivot(&mut tab, &mut dummy, &mut basis, i, c);
            }
            // else: redundant row; the artificial stays basic at value 0.
        }
    }

    // --- 5. phase 2 -------------------------------------------------------
    let mut c_std = vec![0.0; total_cols];
    for j in 0..n {
        let c = lp.objective[j];
        match subs[j] {
            Sub::Shift(p, _) => c_std[p] += c,
            Sub::Neg(p, _) => c_std[p] -= c,
            Sub::Split(p, q) => {
                c_std[p] += c;
                c_std[q] -= c;
            }
        }
    }
    let mut cost2 = vec![0.0; total_cols + 1];
    cost2[..total_cols].copy_from_slice(&c_std);
    for i in 0..m {
        let b = basis[i];
        if cost2[b].abs() > 1e-12 {
            let factor = cost2[b];
            for j in 0..=total_cols {
                cost2[j] -= factor * tab[i][j];
            }
        }
    }
    if !run(&mut tab, &mut cost2, &mut basis, &|j| !is_artificial[j]) {
        return OracleResult {
            status: OracleStatus::Unbounded,
            objective: f64::NAN,
            values: vec![0.0; n],
        };
    }

    // --- 6. extract -------------------------------------------------------
    let mut x_std = vec![0.0; total_cols];
    for i in 0..m {
        x_std[basis[i]] = tab[i][total_cols];
    }
    let mut values = vec![0.0; n];
    for j in 0..n {
        values[j] = match subs[j] {
            Sub::Shift(p, lo) => lo + x_std[p],
            Sub::Neg(p, hi) => hi - x_std[p],
            Sub::Split(p, q) => x_std[p] - x_std[q],
        };
    }
    let objective = values
        .iter()
        .zip(&lp.objective)
        .map(|(x, c)| x * c)
        .sum();
    OracleResult {
        status: OracleStatus::Optimal,
        objective,
        values,
    }
}

// ---------------------------------------------------------------------------
// Brute-force mixed-binary enumeration (oracle)
// ---------------------------------------------------------------------------

/// Enumerates every binary combination; continuous remainders (if any) are
/// solved with the tableau oracle. Returns the best objective and values,
/// or `None` when infeasible. Panics above 22 binary variables.
pub fn enumerate_mbp(mbp: &MixedBinaryProgram) -> Option<(f64, Vec<f64>)> {
    let bins = &mbp.binary;
    assert!(bins.len() <= 22, "enumeration oracle limited to 22 binaries");
    let pure_binary = bins.len() == mbp.lp.n_vars();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << bins.len()) {
        let mut values = vec![0.0; mbp.lp.n_vars()];
        let mut bound_ok = true;
        for (pos, &j) in bins.iter().enumerate() {
            let v = ((mask >> pos) & 1) as f64;
            if v < mbp.lp.lower[j] - 1e-9 || v > mbp.lp.upper[j] + 1e-9 {
                bound_ok = false;
                break;
            }
            values[j] = v;
        }
        if !bound_ok {
            continue;
        }
        let candidate = if pure_binary {
            feasible(&mbp.lp, &values).then(|| {
                let obj = dot(&mbp.lp.objective, &values);
                (obj, values.clone())
            })
        } else {
            let mut sub = mbp.lp.clone();
            for &j in bins {
                sub.set_bounds(j, values[j], values[j]);
            }
            let r = tableau_solve(&sub);
            (r.status == OracleStatus::Optimal).then_some((r.objective, r.values))
        };
        if let Some((obj, vals)) = candidate {
            if best.as_ref().map_or(true, |(b, _)| obj < *b - 1e-12) {
                best = Some((obj, vals));
            }
        }
    }
    best
}

fn dot(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Whether `x` satisfies every row and bound of `lp` within 1e-7.
pub fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    for j in 0..lp.n_vars() {
        if x[j] < lp.lower[j] - 1e-7 || x[j] > lp.upper[j] + 1e-7 {
            return false;
        }
    }
    for row in &lp.rows {
        let act: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        let ok = match row.sense {
            RowSense::Le => act <= row.rhs + 1e-7,
            RowSense::Ge => act >= row.rhs - 1e-7,
            RowSense::Eq => (act - row.rhs).abs() <= 1e-7,
        };
        if !ok {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Exhaustive fair-assignment search (oracle)
// ---------------------------------------------------------------------------

/// Exhaustively searches all `K^n` assignments to fixed centers for the
/// cheapest one meeting the fairness spec (quotas via α-representation
/// counts over pairs the spec allows, cardinality window). Returns `None`
/// when no fair assignment exists. Panics when `K^n` exceeds ~2 million.
pub fn fair_enumerate(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
) -> Option<(Vec<usize>, f64)> {
    let n = problem.dataset.n();
    let k = centers.len();
    assert!((k as f64).powi(n as i32) <= 2.2e6, "instance too large for enumeration");
    let groups = &problem.groups;

    let mut assignment = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        if fair_ok(assignment.as_slice(), k, groups, spec) {
            let cost: f64 = (0..n)
                .map(|i| problem.point_cost(i, &centers[assignment[i]]))
                .sum();
            if best.as_ref().map_or(true, |(_, b)| cost < *b - 1e-12) {
                best = Some((assignment.clone(), cost));
            }
        }
        // next assignment in base-K counting order
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Fairness check used by the enumerator (and reusable on solver outputs).
pub fn fair_ok(
    assignment: &[usize],
    k: usize,
    groups: &GroupStructure,
    spec: &FairnessSpec,
) -> bool {
    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    if sizes
        .iter()
        .any(|&s| s < spec.card_lower || s > spec.card_upper)
    {
        return false;
    }
    for g in 0..groups.n_groups() {
        if spec.beta[g] == 0 {
            continue;
        }
        let f = groups.feature_of(g);
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            if groups.group_of_point(f, i) == g {
                counts[c] += 1;
            }
        }
        let alpha = spec.alpha.for_group(g);
        let lambda = (0..k)
            .filter(|&c| {
                spec.allows(g, c)
                    && sizes[c] >= 1
                    && counts[c] as f64 >= alpha * sizes[c] as f64 - 1e-9
            })
            .count();
        if lambda < spec.beta[g] {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Brute-force unconstrained clustering optimum (oracle)
// ---------------------------------------------------------------------------

/// Global optimum over all `K^n` assignments with centers recomputed per
/// cluster (centroid for k-means, best member for k-medians). Clusters may
/// be empty. Panics when `K^n` exceeds ~2 million.
pub fn brute_force_best_clustering(problem: &ClusteringProblem) -> (Vec<usize>, f64) {
    let n = problem.dataset.n();
    let k = problem.k;
    assert!((k as f64).powi(n as i32) <= 2.2e6, "instance too large for enumeration");

    let mut assignment = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let cost = assignment_cost_with_best_centers(problem, &assignment);
        if best.as_ref().map_or(true, |(_, b)| cost < *b - 1e-12) {
            best = Some((assignment.clone(), cost));
        }
        let mut pos = 0;
        loop {
            if pos == n {
                let (a, c) = best.unwrap();
                return (a, c);
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Cost of an assignment after recomputing each cluster's optimal center.
pub fn assignment_cost_with_best_centers(
    problem: &ClusteringProblem,
    assignment: &[usize],
) -> f64 {
    use minirel::model::Mode;
    let k = problem.k;
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..assignment.len()).filter(|&i| assignment[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        match problem.mode {
            Mode::KMeans => {
                let dim = problem.dataset.dim();
                let mut centroid = vec![0.0; dim];
                for &i in &members {
                    for (d, v) in problem.dataset.point(i).iter().enumerate() {
                        centroid[d] += v;
                    }
                }
                for v in centroid.iter_mut() {
                    *v /= members.len() as f64;
                }
                total += members
                    .iter()
                    .map(|&i| problem.point_cost(i, &centroid))
                    .sum::<f64>();
            }
            Mode::KMedians(_) => {
                total += members
                    .iter()
                    .map(|&cand| {
                        let center = problem.dataset.point(cand).to_vec();
                        members.iter().map(|&i| problem.point_cost(i, &center)).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
            }
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Subset-enumeration myopic cost (oracle)
// ---------------------------------------------------------------------------

/// Myopic local cost via explicit subset enumeration: the cheapest way to
/// move exactly `q` outside members of group `g` into cluster `k`, where `q`
/// is found by linear scan as the smallest count making the group hold an
/// `α` fraction. `None` when undefined (not enough donors, or α = 1 with
/// non-members present).
pub fn local_cost_oracle(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    assignment: &[usize],
    g: usize,
    k: usize,
    alpha: f64,
) -> Option<f64> {
    let n = problem.dataset.n();
    let size = assignment.iter().filter(|&&c| c == k).count();
    let cnt = problem
        .groups
        .members(g)
        .iter()
        .filter(|&&i| assignment[i] == k)
        .count();
    let q = (0..=n).find(|&q| (cnt + q) as f64 >= alpha * (size + q) as f64 - 1e-9)?;
    if q == 0 {
        return Some(0.0);
    }
    let donors: Vec<usize> = problem
        .groups
        .members(g)
        .iter()
        .copied()
        .filter(|&i| assignment[i] != k)
        .collect();
    if donors.len() < q {
        return None;
    }
    let deltas: Vec<f64> = donors
        .iter()
        .map(|&i| problem.point_cost(i, &centers[k]) - problem.point_cost(i, &centers[assignment[i]]))
        .collect();
    let mut best = f64::INFINITY;
    let mut chosen = vec![0usize; q];
    subset_min(&deltas, 0, 0, 0.0, &mut chosen, &mut best);
    Some(best)
}

fn subset_min(deltas: &[f64], start: usize, depth: usize, acc: f64, chosen: &mut [usize], best: &mut f64) {
    if depth == chosen.len() {
        if acc < *best {
            *best = acc;
        }
        return;
    }
    for i in start..deltas.len() {
        chosen[depth] = i;
        subset_min(deltas, i + 1, depth + 1, acc + deltas[i], chosen, best);
    }
}

// ---------------------------------------------------------------------------
// Random model generators for comparison suites
// ---------------------------------------------------------------------------

/// Random LP with mixed senses and bound shapes; seeded for repeatability.
pub fn random_lp<R: Rng>(rng: &mut R, n_vars: usize, n_rows: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(n_vars);
    for j in 0..n_vars {
        lp.set_objective(j, (rng.gen::<f64>() - 0.5) * 10.0);
        match rng.gen_range(0..4) {
            0 => lp.set_bounds(j, 0.0, rng.gen_range(1.0..5.0)),
            1 => lp.set_bounds(j, 0.0, f64::INFINITY),
            2 => lp.set_bounds(j, rng.gen_range(-3.0..0.0), rng.gen_range(0.0..3.0)),
            _ => lp.set_bounds(j, 0.0, 1.0),
        }
    }
    for _ in 0..n_rows {
        let coeffs: Vec<(usize, f64)> = (0..n_vars)
            .filter_map(|j| {
                rng.gen_bool(0.7).then(|| (j, (rng.gen::<f64>() - 0.5) * 10.0))
            })
            .collect();
        let coeffs = if coeffs.is_empty() { vec![(0, 1.0)] } else { coeffs };
        let sense = match rng.gen_range(0..3) {
            0 => RowSense::Le,
            1 => RowSense::Ge,
            _ => RowSense::Eq,
        };
        let rhs = (rng.gen::<f64>() - 0.3) * 8.0;
        lp.add_row(sense, rhs, coeffs);
    }
    lp
}

/// Random all-binary MBP (small knapsack/covering mixes).
pub fn random_mbp<R: Rng>(rng: &mut R, n_bin: usize, n_rows: usize) -> MixedBinaryProgram {
    let mut lp = LinearProgram::new(n_bin);
    for j in 0..n_bin {
        lp.set_bounds(j, 0.0, 1.0);
        lp.set_objective(j, rng.gen_range(-6..7) as f64);
    }
    for _ in 0..n_rows {
        let coeffs: Vec<(usize, f64)> = (0..n_bin)
            .filter_map(|j| rng.gen_bool(0.6).then(|| (j, rng.gen_range(-4..5) as f64)))
            .collect();
        let coeffs = if coeffs.is_empty() { vec![(0, 1.0)] } else { coeffs };
        let sense = if rng.gen_bool(0.5) { RowSense::Le } else { RowSense::Ge };
        let bound = rng.gen_range(-3..6) as f64;
        lp.add_row(sense, bound, coeffs);
    }
    MixedBinaryProgram::new(lp, (0..n_bin).collect()).unwrap()
}
