//! Bounded-variable revised simplex with a dense explicit basis inverse.
//!
//! Layout: structural variables first, then one slack per row, so every
//! constraint is an equation `a·x + s = rhs` whose sense lives in the
//! slack's bounds (`≤` → `s ∈ [0, ∞)`, `≥` → `s ∈ (−∞, 0]`, `=` → `s = 0`).
//! Nonbasic variables sit at a finite bound (or at 0 when free); the basis
//! inverse is kept column-major so ftran/btran and pivot updates run on
//! contiguous slices.
//!
//! Phase 1 uses the relaxed-bound ("composite") method: basic variables may
//! start outside their bounds, and the phase-1 objective is the total bound
//! violation, re-derived from the current iterate each iteration. That makes
//! warm starts cheap — branch-and-bound fixes binary bounds in place and
//! re-solves from the previous basis, paying a handful of pivots per node
//! instead of a refactorization.
//!
//! Determinism: Dantzig pricing with lowest-index tie-breaks, ratio ties
//! preferring the largest pivot element then the lowest basis column, and a
//! Bland's-rule fallback (lowest index everywhere) that kicks in after a run
//! of degenerate pivots and guarantees termination.

use super::{LinearProgram, LpError, LpSolution, LpStatus, RowSense, VarStatus, FEASIBILITY_TOL};

/// Dual (reduced-cost) tolerance for optimality tests.
const DUAL_TOL: f64 = 1e-9;
/// Smallest acceptable pivot magnitude.
const PIVOT_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable, resting at value 0.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase1Outcome {
    Feasible,
    Infeasible,
}

pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    n_cols: usize,
    /// Sparse columns (structural then slack), entries sorted by row.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,

    basis: Vec<usize>,
    state: Vec<VarState>,
    /// Column-major basis inverse: `(B⁻¹)[i][r] = binv[r*m + i]`.
    binv: Vec<f64>,
    xb: Vec<f64>,

    iterations: usize,
    degenerate_run: usize,
    status: LpStatus,
}

impl Simplex {
    pub fn new(lp: &LinearProgram) -> Result<Self, LpError> {
        let m = lp.rows.len();
        let n_struct = lp.n_vars();
        let n_cols = n_struct + m;

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
        let mut rhs = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(n_cols);
        let mut upper = Vec::with_capacity(n_cols);
        lower.extend_from_slice(&lp.lower);
        upper.extend_from_slice(&lp.upper);

        for (r, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                cols[j].push((r, v));
            }
            cols[n_struct + r].push((r, 1.0));
            rhs.push(row.rhs);
            let (lo, hi) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }
        // Merge duplicate row entries within each structural column.
        for col in cols.iter_mut().take(n_struct) {
            col.sort_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match merged.last_mut() {
                    Some((lr, lv)) if *lr == r => *lv += v,
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            *col = merged;
        }

        let mut cost = vec![0.0; n_cols];
        cost[..n_struct].copy_from_slice(&lp.objective);

        let mut state = Vec::with_capacity(n_cols);
        for j in 0..n_cols {
            state.push(if lower[j].is_finite() {
                VarState::AtLower
            } else if upper[j].is_finite() {
                VarState::AtUpper
            } else {
                VarState::Free
            });
        }
        let mut solver = Simplex {
            m,
            n_struct,
            n_cols,
            cols,
            cost,
            lower,
            upper,
            rhs,
            basis: (n_struct..n_cols).collect(),
            state,
            binv: identity(m),
            xb: vec![0.0; m],
            iterations: 0,
            degenerate_run: 0,
            status: LpStatus::Optimal,
        };
        for r in 0..m {
            solver.state[n_struct + r] = VarState::Basic(r);
        }
        solver.recompute_xb();
        Ok(solver)
    }

    /// Nonbasic resting value of column `j` under its current state.
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Free => 0.0,
            VarState::Basic(p) => self.xb[p],
        }
    }

    /// `x_B = B⁻¹ (rhs − N x_N)`.
    fn recompute_xb(&mut self) {
        let mut adj = self.rhs.clone();
        for j in 0..self.n_cols {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(r, a) in &self.cols[j] {
                    adj[r] -= a * v;
                }
            }
        }
        let m = self.m;
        let mut xb = vec![0.0; m];
        for (r, &val) in adj.iter().enumerate() {
            if val != 0.0 {
                let slab = &self.binv[r * m..(r + 1) * m];
                for i in 0..m {
                    xb[i] += val * slab[i];
                }
            }
        }
        self.xb = xb;
    }

    /// `w = B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            let slab = &self.binv[r * m..(r + 1) * m];
            for i in 0..m {
                w[i] += v * slab[i];
            }
        }
        w
    }

    /// `y = cᵦᵀ B⁻¹` for an arbitrary basic cost vector.
    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, yr) in y.iter_mut().enumerate() {
            let slab = &self.binv[r * m..(r + 1) * m];
            let mut acc = 0.0;
            for i in 0..m {
                acc += cb[i] * slab[i];
            }
            *yr = acc;
        }
        y
    }

    /// Applies the elementary row transformation turning column `w`'s
    /// position `r` into a unit vector, onto the stored inverse.
    fn pivot_binv(&mut self, w: &[f64], r: usize) {
        let m = self.m;
        for c in 0..m {
            let slab = &mut self.binv[c * m..(c + 1) * m];
            let vr = slab[r];
            if vr == 0.0 {
                continue;
            }
            let f = vr / w[r];
            for i in 0..m {
                if i == r {
                    slab[i] = f;
                } else {
                    slab[i] -= w[i] * f;
                }
            }
        }
    }

    /// Installs a best-effort warm basis from preferred columns via a
    /// triangular singleton crash. Columns that cannot be placed without
    /// breaking triangularity (or with a negligible pivot) are dropped;
    /// uncovered rows fall back to their slacks. Cost is O(m² + nnz), far
    /// below a dense factorization.
    pub fn crash_basis(&mut self, preferred: &[usize]) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let mut candidates: Vec<usize> = Vec::new();
        let mut seen = vec![false; self.n_cols];
        for &j in preferred {
            if j < self.n_cols && !seen[j] && !self.cols[j].is_empty() {
                seen[j] = true;
                candidates.push(j);
            }
        }

        let mut row_active = vec![true; m];
        let mut active_nnz: Vec<usize> = candidates.iter().map(|&j| self.cols[j].len()).collect();
        let mut cand_alive = vec![true; candidates.len()];
        // row → candidate positions touching it
        let mut row_cands: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (pos, &j) in candidates.iter().enumerate() {
            for &(r, _) in &self.cols[j] {
                row_cands[r].push(pos);
            }
        }

        let mut pivots: Vec<(usize, usize)> = Vec::with_capacity(m); // (col, row)
        let deactivate_row = |r: usize,
                                  row_active: &mut Vec<bool>,
                                  cand_alive: &mut Vec<bool>,
                                  active_nnz: &mut Vec<usize>| {
            row_active[r] = false;
            for &q in &row_cands[r] {
                if cand_alive[q] {
                    active_nnz[q] -= 1;
                    if active_nnz[q] == 0 {
                        cand_alive[q] = false;
                    }
                }
            }
        };
        loop {
            let next = (0..candidates.len())
                .find(|&p| cand_alive[p] && active_nnz[p] == 1);
            if let Some(p) = next {
                let j = candidates[p];
                let entry = self.cols[j].iter().find(|&&(r, _)| row_active[r]);
                let Some(&(r, v)) = entry else {
                    cand_alive[p] = false;
                    continue;
                };
                cand_alive[p] = false;
                if v.abs() <= 1e-8 {
                    continue;
                }
                pivots.push((j, r));
                deactivate_row(r, &mut row_active, &mut cand_alive, &mut active_nnz);
                continue;
            }
            // No candidate is a singleton. Give the most-shared active row to
            // its slack; that is what unlocks assignment-shaped hints, whose
            // columns each own a private row but share a few coupling rows.
            let mut victim: Option<(usize, usize)> = None; // (touches, row)
            for (r, lst) in row_cands.iter().enumerate() {
                if !row_active[r] {
                    continue;
                }
                let touches = lst.iter().filter(|&&q| cand_alive[q]).count();
                if touches == 0 {
                    continue;
                }
                if victim.map_or(true, |(t, _)| touches > t) {
                    victim = Some((touches, r));
                }
            }
            let Some((_, r)) = victim else { break };
            pivots.push((self.n_struct + r, r));
            deactivate_row(r, &mut row_active, &mut cand_alive, &mut active_nnz);
        }
        for r in 0..m {
            if row_active[r] {
                pivots.push((self.n_struct + r, r));
                row_active[r] = false;
            }
        }
        debug_assert_eq!(pivots.len(), m);

        // In pivot order the basis matrix is upper triangular: column c_t
        // touches only rows pivoted at or before step t. Build its rows and
        // back-substitute one unit vector per original row.
        let mut pos_of_row = vec![usize::MAX; m];
        for (t, &(_, r)) in pivots.iter().enumerate() {
            pos_of_row[r] = t;
        }
        let mut diag = vec![0.0; m];
        let mut urows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m]; // row s → [(t, v)], t ≥ s
        for (t, &(j, rt)) in pivots.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                let s = pos_of_row[r];
                debug_assert!(s <= t);
                if r == rt {
                    diag[t] = v;
                } else {
                    urows[s].push((t, v));
                }
            }
        }

        self.binv = vec![0.0; m * m];
        let mut x = vec![0.0; m];
        for r in 0..m {
            let j0 = pos_of_row[r];
            for t in (0..=j0).rev() {
                let mut acc = if t == j0 { 1.0 } else { 0.0 };
                for &(tp, v) in &urows[t] {
                    if tp > t && tp <= j0 {
                        acc -= v * x[tp];
                    }
                }
                x[t] = acc / diag[t];
            }
            let slab = &mut self.binv[r * m..(r + 1) * m];
            for t in 0..=j0 {
                if x[t] != 0.0 {
                    let (_, rt) = pivots[t];
                    slab[rt] = x[t];
                    x[t] = 0.0;
                }
            }
        }

        // Reset states, then mark the installed basis.
        for j in 0..self.n_cols {
            self.state[j] = if self.lower[j].is_finite() {
                VarState::AtLower
            } else if self.upper[j].is_finite() {
                VarState::AtUpper
            } else {
                VarState::Free
            };
        }
        self.basis = vec![0; m];
        for &(j, r) in &pivots {
            self.basis[r] = j;
            self.state[j] = VarState::Basic(r);
        }
        self.recompute_xb();
        #[cfg(debug_assertions)]
        self.verify_inverse();
    }

    #[cfg(debug_assertions)]
    fn verify_inverse(&self) {
        let m = self.m;
        if m == 0 || m > 200 {
            return;
        }
        // (B⁻¹ B) must be the identity: check column by column.
        for (p, &j) in self.basis.iter().enumerate() {
            let w = self.ftran(j);
            for (i, &wi) in w.iter().enumerate() {
                let want = if i == p { 1.0 } else { 0.0 };
                debug_assert!(
                    (wi - want).abs() < 1e-6,
                    "basis inverse drift at ({i},{p}): {wi}"
                );
            }
        }
    }

    /// Tightens or relaxes the bounds of one column in place. Nonbasic
    /// columns are snapped to the nearest surviving bound immediately (with
    /// the basic values updated accordingly); basic columns are left to the
    /// next phase-1 pass.
    pub fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let old_v = self.nonbasic_value(j);
        self.lower[j] = lo;
        self.upper[j] = hi;
        if let VarState::Basic(_) = self.state[j] {
            return;
        }
        let new_state = match self.state[j] {
            VarState::AtLower => {
                if lo.is_finite() { VarState::AtLower } else { VarState::AtUpper }
            }
            VarState::AtUpper => {
                if hi.is_finite() { VarState::AtUpper } else { VarState::AtLower }
            }
            s => s,
        };
        self.state[j] = new_state;
        let new_v = self.nonbasic_value(j);
        let delta = new_v - old_v;
        if delta != 0.0 {
            let w = self.ftran(j);
            for i in 0..self.m {
                self.xb[i] -= delta * w[i];
            }
        }
    }

    fn pivot_cap(&self) -> usize {
        20_000.max(60 * (self.m + self.n_cols))
    }

    /// Runs phase 1 (restore primal feasibility) then phase 2 (optimize)
    /// from the current basis. Re-entrant: callers may adjust bounds and
    /// solve again, warm.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        self.iterations = 0;
        self.degenerate_run = 0;
        match self.phase1()? {
            Phase1Outcome::Infeasible => {
                self.status = LpStatus::Infeasible;
                return Ok(self.status);
            }
            Phase1Outcome::Feasible => {}
        }
        self.status = self.phase2()?;
        Ok(self.status)
    }

    fn bland_active(&self) -> bool {
        self.degenerate_run >= DEGENERATE_SWITCH
    }

    fn count_iteration(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.pivot_cap() {
            return Err(LpError::Numerical(format!(
                "pivot limit {} exceeded (m={}, n={})",
                self.pivot_cap(),
                self.m,
                self.n_struct
            )));
        }
        Ok(())
    }

    fn phase1(&mut self) -> Result<Phase1Outcome, LpError> {
        loop {
            // Violation-derived phase-1 costs on basic variables.
            let mut cb = vec![0.0; self.m];
            let mut total_violation = 0.0;
            for (i, &j) in self.basis.iter().enumerate() {
                let v = self.xb[i];
                if v < self.lower[j] - FEASIBILITY_TOL {
                    cb[i] = -1.0;
                    total_violation += self.lower[j] - v;
                } else if v > self.upper[j] + FEASIBILITY_TOL {
                    cb[i] = 1.0;
                    total_violation += v - self.upper[j];
                }
            }
            if total_violation == 0.0 {
                return Ok(Phase1Outcome::Feasible);
            }
            self.count_iteration()?;
            let y = self.btran(&cb);
            let Some((j, sigma)) = self.price(&y, None) else {
                return Ok(Phase1Outcome::Infeasible);
            };
            let w = self.ftran(j);
            self.step(j, sigma, &w, true)?;
        }
    }

    fn phase2(&mut self) -> Result<LpStatus, LpError> {
        loop {
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            let y = self.btran(&cb);
            let Some((j, sigma)) = self.price(&y, Some(&self.cost)) else {
                return Ok(LpStatus::Optimal);
            };
            self.count_iteration()?;
            let w = self.ftran(j);
            if !self.step(j, sigma, &w, false)? {
                return Ok(LpStatus::Unbounded);
            }
        }
    }

    /// Picks an entering column and travel direction (+1 up, −1 down), or
    /// `None` at optimality. `costs` is `None` in phase 1 (nonbasic phase-1
    /// cost is zero by construction).
    fn price(&self, y: &[f64], costs: Option<&[f64]>) -> Option<(usize, f64)> {
        let zero = vec![];
        let c: &[f64] = match costs {
            Some(c) => c,
            None => &zero,
        };
        let cost_of = |j: usize| if c.is_empty() { 0.0 } else { c[j] };
        let bland = self.bland_active();
        let mut best: Option<(f64, usize, f64)> = None; // (score, col, sigma)
        for j in 0..self.n_cols {
            let (dir_up, dir_down) = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => (true, false),
                VarState::AtUpper => (false, true),
                VarState::Free => (true, true),
            };
            // Fixed columns can never move.
            if self.upper[j] - self.lower[j] <= 1e-12 && self.state[j] != VarState::Free {
                continue;
            }
            let d = {
                let mut d = cost_of(j);
                for &(r, v) in &self.cols[j] {
                    d -= y[r] * v;
                }
                d
            };
            let candidate = if dir_up && d < -DUAL_TOL {
                Some((d.abs(), 1.0))
            } else if dir_down && d > DUAL_TOL {
                Some((d.abs(), -1.0))
            } else {
                None
            };
            if let Some((score, sigma)) = candidate {
                if bland {
                    return Some((j, sigma));
                }
                if best.map_or(true, |(s, _, _)| score > s) {
                    best = Some((score, j, sigma));
                }
            }
        }
        best.map(|(_, j, sigma)| (j, sigma))
    }

    /// Ratio test + pivot (or bound flip). Returns `Ok(false)` when the
    /// direction is unbounded (meaningful only in phase 2).
    fn step(&mut self, j: usize, sigma: f64, w: &[f64], phase1: bool) -> Result<bool, LpError> {
        let bland = self.bland_active();
        // Entering column's own travel before flipping to its other bound.
        let flip_limit = match self.state[j] {
            VarState::AtLower | VarState::AtUpper => self.upper[j] - self.lower[j],
            _ => f64::INFINITY,
        };

        #[derive(Clone, Copy)]
        struct Leave {
            ratio: f64,
            pos: usize,
            to_upper: bool,
            pivot_abs: f64,
        }
        let mut leave: Option<Leave> = None;
        for (i, &wi) in w.iter().enumerate() {
            if wi.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -sigma * wi; // d x_B[i] / dt
            let bj = self.basis[i];
            let v = self.xb[i];
            let (lo, hi) = (self.lower[bj], self.upper[bj]);
            let below = v < lo - FEASIBILITY_TOL;
            let above = v > hi + FEASIBILITY_TOL;
            let (ratio, to_upper) = if phase1 && below {
                if delta > 0.0 {
                    ((lo - v) / delta, false)
                } else {
                    continue;
                }
            } else if phase1 && above {
                if delta < 0.0 {
                    ((v - hi) / -delta, true)
                } else {
                    continue;
                }
            } else if delta > 0.0 {
                if hi.is_finite() {
                    (((hi - v) / delta).max(0.0), true)
                } else {
                    continue;
                }
            } else {
                if lo.is_finite() {
                    (((v - lo) / -delta).max(0.0), false)
                } else {
                    continue;
                }
            };
            let cand = Leave { ratio, pos: i, to_upper, pivot_abs: wi.abs() };
            let better = match leave {
                None => true,
                Some(cur) => {
                    if bland {
                        ratio < cur.ratio - 1e-12
                            || (ratio < cur.ratio + 1e-12 && self.basis[i] < self.basis[cur.pos])
                    } else {
                        ratio < cur.ratio - 1e-12
                            || (ratio < cur.ratio + 1e-12
                                && (cand.pivot_abs > cur.pivot_abs + 1e-12
                                    || (cand.pivot_abs > cur.pivot_abs - 1e-12
                                        && self.basis[i] < self.basis[cur.pos])))
                    }
                }
            };
            if better {
                leave = Some(cand);
            }
        }

        let row_ratio = leave.map_or(f64::INFINITY, |l| l.ratio);
        if flip_limit < row_ratio {
            // Bound flip: no basis change.
            let t = flip_limit;
            if t.is_infinite() {
                return Ok(false);
            }
            for (i, &wi) in w.iter().enumerate() {
                self.xb[i] -= sigma * t * wi;
            }
            self.state[j] = match self.state[j] {
                VarState::AtLower => VarState::AtUpper,
                VarState::AtUpper => VarState::AtLower,
                s => s,
            };
            self.degenerate_run = if t <= 1e-12 { self.degenerate_run + 1 } else { 0 };
            return Ok(true);
        }
        let Some(l) = leave else {
            return Ok(false); // no limit in any row and no flip: unbounded
        };
        if phase1 && l.ratio.is_infinite() {
            return Err(LpError::Numerical(
                "phase 1 found no blocking bound on an improving direction".into(),
            ));
        }

        let t = l.ratio.max(0.0);
        let entering_value = self.nonbasic_value(j) + sigma * t;
        for (i, &wi) in w.iter().enumerate() {
            self.xb[i] -= sigma * t * wi;
        }
        let leaving_col = self.basis[l.pos];
        self.state[leaving_col] = if l.to_upper { VarState::AtUpper } else { VarState::AtLower };
        if w[l.pos].abs() <= PIVOT_TOL {
            return Err(LpError::Numerical("pivot element vanished".into()));
        }
        self.pivot_binv(w, l.pos);
        self.basis[l.pos] = j;
        self.state[j] = VarState::Basic(l.pos);
        self.xb[l.pos] = entering_value;
        self.degenerate_run = if t <= 1e-12 { self.degenerate_run + 1 } else { 0 };
        Ok(true)
    }

    /// Objective of the current iterate.
    pub fn objective_value(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| self.cost[j] * self.nonbasic_value(j))
            .sum()
    }

    /// Structural variable values of the current iterate.
    pub fn structural_values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.nonbasic_value(j)).collect()
    }

    /// Packages the current iterate as an [`LpSolution`].
    pub fn extract_solution(&self) -> LpSolution {
        if self.status != LpStatus::Optimal {
            return LpSolution::non_optimal(self.status, self.n_struct);
        }
        let values = self.structural_values();
        let basis = (0..self.n_struct)
            .map(|j| match self.state[j] {
                VarState::Basic(_) => VarStatus::Basic,
                _ => VarStatus::NonBasic,
            })
            .collect();
        LpSolution {
            objective: self.objective_value(),
            values,
            status: LpStatus::Optimal,
            basis,
        }
    }
}

fn identity(m: usize) -> Vec<f64> {
    let mut b = vec![0.0; m * m];
    for r in 0..m {
        b[r * m + r] = 1.0;
    }
    b
}
