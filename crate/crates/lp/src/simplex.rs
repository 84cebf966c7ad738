//! Bounded revised simplex on the computational form `A x - r = 0`,
//! `l <= x <= u`, `lo <= r <= hi`.
//!
//! Row activities `r` are the logical variables, so the dual value of a row is
//! the reduced cost of its logical. The dual simplex drives every solve; the
//! primal simplex only cleans up after artificial bounds were needed to reach
//! a dual feasible start.

use crate::lu::LuFactor;
use crate::model::LinearModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic away from its bounds (free variables, or after bound removal).
    Free,
}

/// Status vector over structural columns followed by row logicals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to smallest-index rules.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iter: 200_000,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-7,
            refactor_every: 64,
            bland_after: 200,
        }
    }
}

const ARTIFICIAL_BOUND: f64 = 1e7;
/// Bound violation (relative) accepted when no pivot can remove it.
const NEAR_FEASIBLE: f64 = 1e-7;
const TINY_PIVOT: f64 = 1e-11;
const CANCELLATION: f64 = 1e-11;
const NONE: usize = usize::MAX;

enum Phase {
    Optimal,
    Infeasible(Vec<f64>),
    Unbounded(Vec<f64>),
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    obj_offset: f64,
    lb: Vec<f64>,
    ub: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    pos: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    y: Vec<f64>,
    lu: LuFactor,
    factor_valid: bool,
    pub opts: SimplexOptions,
    last: Option<LpStatus>,
    farkas: Option<Vec<f64>>,
    ray: Option<Vec<f64>>,
    iterations: usize,
    /// Costs before anti-cycling perturbation, restored after each dual phase.
    unperturbed: Option<Vec<f64>>,
}

impl Simplex {
    /// Set up the LP relaxation of `model` with a slack basis. Integrality is ignored.
    pub fn new(model: &LinearModel) -> Simplex {
        let n = model.num_vars();
        let m = model.num_cons();
        let rows: Vec<Vec<(usize, f64)>> = model
            .cons
            .iter()
            .map(|c| merge_terms(c.terms.iter().map(|&(v, a)| (v.0, a))))
            .collect();
        let mut s = Simplex {
            n,
            m: 0,
            col_start: vec![0; n + 1],
            col_idx: Vec::new(),
            col_val: Vec::new(),
            row_start: vec![0],
            row_idx: Vec::new(),
            row_val: Vec::new(),
            cost: model.vars.iter().map(|v| v.obj).collect(),
            obj_offset: model.obj_offset,
            lb: model.vars.iter().map(|v| v.lb).collect(),
            ub: model.vars.iter().map(|v| v.ub).collect(),
            status: Vec::with_capacity(n + m),
            head: Vec::with_capacity(m),
            pos: vec![NONE; n],
            x: vec![0.0; n],
            d: vec![0.0; n],
            y: Vec::new(),
            lu: LuFactor::default(),
            factor_valid: false,
            opts: SimplexOptions::default(),
            last: None,
            farkas: None,
            ray: None,
            iterations: 0,
            unperturbed: None,
        };
        for j in 0..n {
            let st = initial_status(s.lb[j], s.ub[j], s.cost[j]);
            s.status.push(st);
            s.x[j] = nonbasic_value(st, s.lb[j], s.ub[j], 0.0);
        }
        let bounds: Vec<(f64, f64)> = model.cons.iter().map(|c| c.row_bounds()).collect();
        s.push_rows(rows, &bounds);
        s
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn status(&self) -> Option<LpStatus> {
        self.last
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        (self.lb[self.n + i], self.ub[self.n + i])
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    pub fn set_col_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        self.set_bounds(j, lb, ub);
    }

    pub fn set_row_bounds(&mut self, i: usize, lo: f64, hi: f64) {
        self.set_bounds(self.n + i, lo, hi);
    }

    fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        self.lb[j] = lb;
        self.ub[j] = ub;
        self.last = None;
    }

    /// Append rows `(terms, lo, hi)`; their logicals enter the basis.
    pub fn add_rows(&mut self, rows: &[(Vec<(usize, f64)>, f64, f64)]) {
        let merged: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|(t, _, _)| merge_terms(t.iter().copied()))
            .collect();
        let bounds: Vec<(f64, f64)> = rows.iter().map(|r| (r.1, r.2)).collect();
        self.push_rows(merged, &bounds);
    }

    fn push_rows(&mut self, rows: Vec<Vec<(usize, f64)>>, bounds: &[(f64, f64)]) {
        for (terms, &(lo, hi)) in rows.into_iter().zip(bounds) {
            let mut act = 0.0;
            for (j, a) in terms {
                self.row_idx.push(j);
                self.row_val.push(a);
                act += a * self.x[j];
            }
            self.row_start.push(self.row_idx.len());
            let li = self.n + self.m;
            self.lb.push(lo);
            self.ub.push(hi);
            self.cost.push(0.0);
            self.status.push(VarStatus::Basic);
            self.x.push(act);
            self.d.push(0.0);
            self.y.push(0.0);
            self.pos.push(self.head.len());
            self.head.push(li);
            self.m += 1;
        }
        self.rebuild_columns();
        self.factor_valid = false;
        self.last = None;
    }

    fn rebuild_columns(&mut self) {
        let n = self.n;
        let mut count = vec![0usize; n + 1];
        for &j in &self.row_idx {
            count[j + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let nnz = self.row_idx.len();
        let mut idx = vec![0usize; nnz];
        let mut val = vec![0.0; nnz];
        let mut next = count.clone();
        for i in 0..self.m {
            for t in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_idx[t];
                idx[next[j]] = i;
                val[next[j]] = self.row_val[t];
                next[j] += 1;
            }
        }
        self.col_start = count;
        self.col_idx = idx;
        self.col_val = val;
    }

    pub fn basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
        }
    }

    /// Install a basis saved earlier from this solver (or one with the same shape).
    pub fn set_basis(&mut self, basis: &Basis) {
        let total = self.n + self.m;
        let nb = basis
            .status
            .iter()
            .filter(|&&s| s == VarStatus::Basic)
            .count();
        if basis.status.len() != total || nb != self.m {
            self.reset_to_slack_basis();
            return;
        }
        self.status.clone_from(&basis.status);
        self.head.clear();
        for j in 0..total {
            if self.status[j] == VarStatus::Basic {
                self.pos[j] = self.head.len();
                self.head.push(j);
            } else {
                self.pos[j] = NONE;
            }
        }
        self.factor_valid = false;
        self.last = None;
    }

    pub fn reset_to_slack_basis(&mut self) {
        let total = self.n + self.m;
        self.head.clear();
        for j in 0..total {
            if j < self.n {
                self.status[j] = initial_status(self.lb[j], self.ub[j], self.cost[j]);
                self.pos[j] = NONE;
            } else {
                self.status[j] = VarStatus::Basic;
                self.pos[j] = self.head.len();
                self.head.push(j);
            }
        }
        self.factor_valid = false;
        self.last = None;
    }

    pub fn objective(&self) -> f64 {
        self.obj_offset + (0..self.n).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    pub fn primal(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn row_activities(&self) -> &[f64] {
        &self.x[self.n..]
    }

    /// Row duals: the derivative of the optimum with respect to each row bound.
    pub fn duals(&self) -> &[f64] {
        &self.y
    }

    pub fn reduced_costs(&self) -> &[f64] {
        &self.d[..self.n]
    }

    pub fn farkas(&self) -> Option<&[f64]> {
        self.farkas.as_deref()
    }

    pub fn primal_ray(&self) -> Option<&[f64]> {
        self.ray.as_deref()
    }

    pub fn row_terms(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[i]..self.row_start[i + 1]).map(move |t| (self.row_idx[t], self.row_val[t]))
    }

    /// Validity margin of a row-multiplier certificate against the current bounds.
    /// Positive means the certificate proves infeasibility.
    pub fn farkas_margin(&self, y: &[f64]) -> f64 {
        let mut v = vec![0.0; self.n];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (j, a) in self.row_terms(i) {
                    v[j] += yi * a;
                }
            }
        }
        let rows = (0..self.m).map(|i| (y[i], self.lb[self.n + i], self.ub[self.n + i]));
        let cols = (0..self.n).map(|j| (v[j], self.lb[j], self.ub[j]));
        certificate_margin(rows, cols)
    }

    pub fn solve(&mut self) -> LpStatus {
        self.farkas = None;
        self.ray = None;
        let iter_cap = self.iterations.saturating_add(self.opts.max_iter);
        self.normalize_nonbasic();
        if !self.factor_valid {
            self.refactor();
        }
        self.compute_primal();
        self.compute_duals();

        let mut art_size = ARTIFICIAL_BOUND;
        let result = loop {
            let saved = self.make_dual_feasible(art_size);
            let phase = self.dual_phase(iter_cap);
            if let Some(cost) = self.unperturbed.take() {
                self.cost = cost;
                self.compute_duals();
            }
            let used_art = !saved.is_empty();
            match phase {
                Phase::Optimal => {
                    // with artificial bounds lifted the basis may need primal pivots; without
                    // them this only repairs reduced costs that drifted during updates
                    self.restore_bounds(&saved);
                    match self.primal_phase(iter_cap) {
                        Phase::Optimal => break LpStatus::Optimal,
                        Phase::Unbounded(ray) => {
                            self.ray = Some(ray);
                            break LpStatus::Unbounded;
                        }
                        Phase::Infeasible(_) | Phase::IterationLimit => {
                            break LpStatus::IterationLimit;
                        }
                    }
                }
                Phase::Infeasible(rho) => {
                    self.restore_bounds(&saved);
                    if let Some(cert) = self.orient_certificate(&rho) {
                        self.farkas = Some(cert);
                        break LpStatus::Infeasible;
                    }
                    if used_art && art_size < 1e13 {
                        art_size *= 1e3;
                        self.normalize_nonbasic();
                        self.compute_primal();
                        continue;
                    }
                    break LpStatus::IterationLimit;
                }
                Phase::Unbounded(_) | Phase::IterationLimit => {
                    self.restore_bounds(&saved);
                    break LpStatus::IterationLimit;
                }
            }
        };
        if result == LpStatus::Optimal {
            self.compute_duals();
        }
        self.last = Some(result);
        result
    }

    fn normalize_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            let (l, u) = (self.lb[j], self.ub[j]);
            let st = self.status[j];
            let st = match st {
                VarStatus::Basic => continue,
                VarStatus::AtLower if l.is_finite() => VarStatus::AtLower,
                VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
                VarStatus::AtLower | VarStatus::AtUpper => {
                    if l.is_finite() {
                        VarStatus::AtLower
                    } else if u.is_finite() {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::Free
                    }
                }
                VarStatus::Free => {
                    if l == u {
                        VarStatus::AtLower
                    } else {
                        VarStatus::Free
                    }
                }
            };
            self.status[j] = st;
            self.x[j] = nonbasic_value(st, l, u, self.x[j]);
        }
    }

    /// Flip boxed nonbasics to their dual feasible bound and give the rest
    /// temporary bounds. Returns the original bounds of temporarily boxed columns.
    fn make_dual_feasible(&mut self, big: f64) -> Vec<(usize, f64, f64)> {
        let tol = self.opts.dual_tol;
        let mut saved = Vec::new();
        let mut changed = false;
        for j in 0..self.n + self.m {
            let st = self.status[j];
            if st == VarStatus::Basic {
                continue;
            }
            let dj = self.d[j];
            let (l, u) = (self.lb[j], self.ub[j]);
            let want = if dj > tol {
                VarStatus::AtLower
            } else if dj < -tol {
                VarStatus::AtUpper
            } else {
                continue;
            };
            if want == st {
                continue;
            }
            changed = true;
            match want {
                VarStatus::AtLower if l.is_finite() => {}
                VarStatus::AtUpper if u.is_finite() => {}
                VarStatus::AtLower => {
                    saved.push((j, l, u));
                    self.lb[j] = if u.is_finite() {
                        u - big
                    } else {
                        self.x[j].min(0.0) - big
                    };
                }
                _ => {
                    saved.push((j, l, u));
                    self.ub[j] = if l.is_finite() {
                        l + big
                    } else {
                        self.x[j].max(0.0) + big
                    };
                }
            }
            self.status[j] = want;
            self.x[j] = if want == VarStatus::AtLower {
                self.lb[j]
            } else {
                self.ub[j]
            };
        }
        if changed {
            self.compute_primal();
        }
        saved
    }

    fn restore_bounds(&mut self, saved: &[(usize, f64, f64)]) {
        for &(j, l, u) in saved {
            self.lb[j] = l;
            self.ub[j] = u;
            if self.status[j] != VarStatus::Basic {
                let at_lower =
                    self.status[j] == VarStatus::AtLower && l.is_finite() && self.x[j] == l;
                let at_upper =
                    self.status[j] == VarStatus::AtUpper && u.is_finite() && self.x[j] == u;
                if !at_lower && !at_upper {
                    self.status[j] = VarStatus::Free;
                }
            }
        }
    }

    /// Turn a row of `B^-1` into a certificate valid for the true bounds, trying both signs.
    fn orient_certificate(&self, rho: &[f64]) -> Option<Vec<f64>> {
        let scale = rho.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if scale == 0.0 {
            return None;
        }
        let cleaned: Vec<f64> = rho
            .iter()
            .map(|&v| {
                if v.abs() < 1e-11 * scale {
                    0.0
                } else {
                    v / scale
                }
            })
            .collect();
        for sign in [1.0, -1.0] {
            let y: Vec<f64> = cleaned.iter().map(|v| sign * v).collect();
            if self.farkas_margin(&y) > 1e-9 {
                return Some(y);
            }
        }
        None
    }

    fn column_into(&self, j: usize, buf: &mut [f64]) {
        if j < self.n {
            for t in self.col_start[j]..self.col_start[j + 1] {
                buf[self.col_idx[t]] = self.col_val[t];
            }
        } else {
            buf[j - self.n] = -1.0;
        }
    }

    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self
                .head
                .iter()
                .map(|&j| {
                    if j < self.n {
                        (self.col_start[j]..self.col_start[j + 1])
                            .map(|t| (self.col_idx[t], self.col_val[t]))
                            .collect()
                    } else {
                        vec![(j - self.n, -1.0)]
                    }
                })
                .collect();
            match LuFactor::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    self.factor_valid = true;
                    return;
                }
                Err(sing) => {
                    for (&p, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let (l, u) = (self.lb[out], self.ub[out]);
                        let st = if l.is_finite()
                            && (!u.is_finite()
                                || (self.x[out] - l).abs() <= (self.x[out] - u).abs())
                        {
                            VarStatus::AtLower
                        } else if u.is_finite() {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::Free
                        };
                        self.status[out] = st;
                        self.x[out] = nonbasic_value(st, l, u, self.x[out]);
                        self.pos[out] = NONE;
                        let inn = self.n + row;
                        self.status[inn] = VarStatus::Basic;
                        self.pos[inn] = p;
                        self.head[p] = inn;
                    }
                }
            }
        }
    }

    fn compute_primal(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for t in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.col_idx[t]] += self.col_val[t] * xj;
                }
            }
        }
        for i in 0..m {
            let j = self.n + i;
            if self.status[j] != VarStatus::Basic {
                rhs[i] -= self.x[j];
            }
        }
        let mut w = vec![0.0; m];
        self.lu.ftran(&mut rhs, &mut w);
        for k in 0..m {
            self.x[self.head[k]] = -w[k];
        }
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        let mut cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let mut y = vec![0.0; m];
        self.lu.btran(&mut cb, &mut y);
        for j in 0..self.n {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut s = self.cost[j];
            for t in self.col_start[j]..self.col_start[j + 1] {
                s -= y[self.col_idx[t]] * self.col_val[t];
            }
            self.d[j] = s;
        }
        for i in 0..m {
            let j = self.n + i;
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                y[i]
            };
        }
        self.y = y;
    }

    /// `alpha_j = rho^T a_j` for every nonbasic column touched by `rho`.
    fn pivot_row(
        &self,
        rho: &[f64],
        alpha: &mut [f64],
        mag: &mut [f64],
        seen: &mut [bool],
        touched: &mut Vec<usize>,
    ) {
        for &j in touched.iter() {
            alpha[j] = 0.0;
            mag[j] = 0.0;
            seen[j] = false;
        }
        touched.clear();
        for (i, &ri) in rho.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for t in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_idx[t];
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j);
                }
                alpha[j] += ri * self.row_val[t];
                mag[j] += (ri * self.row_val[t]).abs();
            }
            let lj = self.n + i;
            if self.status[lj] != VarStatus::Basic {
                if !seen[lj] {
                    seen[lj] = true;
                    touched.push(lj);
                }
                alpha[lj] = -ri;
            }
        }
        // entries at the level of cancellation error are structural zeros
        for &j in touched.iter() {
            if alpha[j].abs() <= CANCELLATION * mag[j] {
                alpha[j] = 0.0;
            }
        }
    }

    /// Push nonbasic costs away from their bounds by tiny distinct amounts so
    /// dual ties break; keeps dual feasibility.
    fn perturb_costs(&mut self) {
        self.unperturbed = Some(self.cost.clone());
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        for j in 0..self.n {
            h = h
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let u = 1.0 + (h >> 11) as f64 / (1u64 << 53) as f64;
            let step = 1e-7 * u * (1.0 + self.cost[j].abs());
            match self.status[j] {
                VarStatus::AtLower => self.cost[j] += step,
                VarStatus::AtUpper => self.cost[j] -= step,
                _ => {}
            }
        }
        self.compute_duals();
    }

    fn dual_phase(&mut self, iter_cap: usize) -> Phase {
        let (m, total) = (self.m, self.n + self.m);
        let ptol = self.opts.primal_tol;
        let dtol = self.opts.dual_tol;
        let pivtol = self.opts.pivot_tol;
        let mut rho_pos = vec![0.0; m];
        let mut rho = vec![0.0; m];
        let mut alpha = vec![0.0; total];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; total];
        let mut mag = vec![0.0; total];
        let mut colbuf = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut degenerate = 0usize;
        let mut best_z = f64::NEG_INFINITY;
        let mut retried = false;
        // basics left slightly outside their bounds because no column can repair them
        let mut tolerated = vec![false; total];
        loop {
            if self.iterations >= iter_cap {
                return Phase::IterationLimit;
            }
            if self.lu.num_updates() >= self.opts.refactor_every {
                self.refactor();
                self.compute_primal();
                self.compute_duals();
            }
            if degenerate == self.opts.bland_after && self.unperturbed.is_none() {
                self.perturb_costs();
                degenerate = 0;
            }
            let bland = degenerate > self.opts.bland_after;
            let mut leave = NONE;
            let mut best = 0.0;
            for k in 0..m {
                let j = self.head[k];
                if tolerated[j] {
                    continue;
                }
                let xv = self.x[j];
                let infeas = if xv < self.lb[j] - ptol {
                    self.lb[j] - xv
                } else if xv > self.ub[j] + ptol {
                    xv - self.ub[j]
                } else {
                    continue;
                };
                let take = if bland {
                    leave == NONE || j < self.head[leave]
                } else {
                    infeas > best
                };
                if take {
                    leave = k;
                    best = infeas;
                }
            }
            if leave == NONE {
                return Phase::Optimal;
            }
            let r = leave;
            let jout = self.head[r];
            let to_lower = self.x[jout] < self.lb[jout];
            rho_pos.iter_mut().for_each(|v| *v = 0.0);
            rho_pos[r] = 1.0;
            self.lu.btran(&mut rho_pos, &mut rho);
            self.pivot_row(&rho, &mut alpha, &mut mag, &mut seen, &mut touched);

            let s = if to_lower { 1.0 } else { -1.0 };
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            // small pivots are only used when nothing larger can repair the row
            let mut eff_tol = pivtol;
            for tier in [pivtol, TINY_PIVOT] {
                eff_tol = tier;
                for &j in &touched {
                    let a = alpha[j];
                    if a.abs() < tier || self.lb[j] == self.ub[j] {
                        continue;
                    }
                    let t = match self.status[j] {
                        VarStatus::AtLower => 1.0,
                        VarStatus::AtUpper => -1.0,
                        VarStatus::Free => {
                            if -a * s > 0.0 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        VarStatus::Basic => continue,
                    };
                    if -a * t * s <= 0.0 {
                        continue;
                    }
                    let slack = (self.d[j] * t).max(0.0);
                    cands.push((j, slack, a.abs()));
                }
                if !cands.is_empty() {
                    break;
                }
            }
            // pick the entering column; a candidate whose fresh column has no
            // usable entry in row r was noise in rho and is dropped
            let mut entering = None;
            let mut refresh = false;
            while !cands.is_empty() {
                let q = if bland {
                    let min_ratio = cands
                        .iter()
                        .map(|c| c.1 / c.2)
                        .fold(f64::INFINITY, f64::min);
                    cands
                        .iter()
                        .filter(|c| c.1 / c.2 <= min_ratio + 1e-12)
                        .map(|c| c.0)
                        .min()
                        .unwrap()
                } else {
                    let bound = cands
                        .iter()
                        .map(|c| (c.1 + dtol) / c.2)
                        .fold(f64::INFINITY, f64::min);
                    let mut pick = (NONE, 0.0);
                    for c in &cands {
                        if c.1 / c.2 <= bound && c.2 > pick.1 {
                            pick = (c.0, c.2);
                        }
                    }
                    pick.0
                };
                colbuf.iter_mut().for_each(|v| *v = 0.0);
                self.column_into(q, &mut colbuf);
                self.lu.ftran(&mut colbuf, &mut w);
                let aq = alpha[q];
                let agrees = (w[r] - aq).abs() <= 1e-7 * (1.0 + aq.abs());
                if w[r].abs() >= eff_tol && agrees {
                    entering = Some(q);
                    break;
                }
                if !retried && self.lu.num_updates() > 0 {
                    refresh = true;
                    break;
                }
                if w[r].abs() >= eff_tol {
                    // fresh factors; trust the column
                    entering = Some(q);
                    break;
                }
                cands.retain(|c| c.0 != q);
            }
            if refresh || (entering.is_none() && !retried && self.lu.num_updates() > 0) {
                retried = true;
                self.refactor();
                self.compute_primal();
                self.compute_duals();
                continue;
            }
            let Some(q) = entering else {
                let target = if to_lower {
                    self.lb[jout]
                } else {
                    self.ub[jout]
                };
                if best <= NEAR_FEASIBLE * (1.0 + target.abs()) {
                    tolerated[jout] = true;
                    continue;
                }
                return Phase::Infeasible(rho.clone());
            };
            let aq = w[r];
            retried = false;
            let target = if to_lower {
                self.lb[jout]
            } else {
                self.ub[jout]
            };
            let delta = (self.x[jout] - target) / w[r];
            for k in 0..m {
                if w[k] != 0.0 {
                    let j = self.head[k];
                    self.x[j] -= w[k] * delta;
                }
            }
            self.x[q] += delta;
            self.x[jout] = target;

            let q_slack = cands.iter().find(|c| c.0 == q).map_or(0.0, |c| c.1);
            let theta_d = if q_slack == 0.0 { 0.0 } else { self.d[q] / aq };
            for &j in &touched {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] -= theta_d * alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[jout] = -theta_d;

            self.status[jout] = if to_lower {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.status[q] = VarStatus::Basic;
            self.pos[jout] = NONE;
            self.pos[q] = r;
            self.head[r] = q;
            self.lu.update(r, &w);
            self.iterations += 1;
            // stalling is judged on the objective; tiny dual steps can alternate forever
            let z: f64 = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
            if z > best_z + 1e-9 * (1.0 + z.abs()) {
                best_z = z;
                degenerate = 0;
            } else {
                degenerate += 1;
            }
        }
    }

    fn primal_phase(&mut self, iter_cap: usize) -> Phase {
        let (m, total) = (self.m, self.n + self.m);
        let ptol = self.opts.primal_tol;
        let dtol = self.opts.dual_tol;
        let pivtol = self.opts.pivot_tol;
        let mut rho_pos = vec![0.0; m];
        let mut rho = vec![0.0; m];
        let mut alpha = vec![0.0; total];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; total];
        let mut mag = vec![0.0; total];
        let mut colbuf = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut degenerate = 0usize;
        self.compute_duals();
        loop {
            if self.iterations >= iter_cap {
                return Phase::IterationLimit;
            }
            if self.lu.num_updates() >= self.opts.refactor_every {
                self.refactor();
                self.compute_primal();
                self.compute_duals();
            }
            let bland = degenerate > self.opts.bland_after;
            let mut q = NONE;
            let mut dir = 0.0;
            let mut best = 0.0;
            for j in 0..total {
                if self.status[j] == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let dj = self.d[j];
                let t = if dj < -dtol && self.x[j] < self.ub[j] - ptol {
                    1.0
                } else if dj > dtol && self.x[j] > self.lb[j] + ptol {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    if q == NONE {
                        q = j;
                        dir = t;
                    }
                } else if dj.abs() > best {
                    best = dj.abs();
                    q = j;
                    dir = t;
                }
            }
            if q == NONE {
                return Phase::Optimal;
            }
            colbuf.iter_mut().for_each(|v| *v = 0.0);
            self.column_into(q, &mut colbuf);
            self.lu.ftran(&mut colbuf, &mut w);

            let own = if dir > 0.0 {
                self.ub[q] - self.x[q]
            } else {
                self.x[q] - self.lb[q]
            };
            let mut bound = f64::INFINITY;
            for k in 0..m {
                let g = -w[k] * dir;
                let j = self.head[k];
                if g < -pivtol && self.lb[j].is_finite() {
                    bound = bound.min((self.x[j] - self.lb[j] + ptol) / -g);
                } else if g > pivtol && self.ub[j].is_finite() {
                    bound = bound.min((self.ub[j] - self.x[j] + ptol) / g);
                }
            }
            if !own.is_finite() && !bound.is_finite() {
                let mut ray = vec![0.0; self.n];
                if q < self.n {
                    ray[q] = dir;
                }
                for k in 0..m {
                    let j = self.head[k];
                    if j < self.n {
                        ray[j] = -w[k] * dir;
                    }
                }
                return Phase::Unbounded(ray);
            }
            let mut leave = NONE;
            let mut step = own;
            if bound < own {
                let mut best_g = 0.0;
                for k in 0..m {
                    let g = -w[k] * dir;
                    let j = self.head[k];
                    let lim = if g < -pivtol && self.lb[j].is_finite() {
                        (self.x[j] - self.lb[j]) / -g
                    } else if g > pivtol && self.ub[j].is_finite() {
                        (self.ub[j] - self.x[j]) / g
                    } else {
                        continue;
                    };
                    let better = if bland {
                        lim <= bound && (leave == NONE || j < self.head[leave])
                    } else {
                        lim <= bound && g.abs() > best_g
                    };
                    if better {
                        leave = k;
                        best_g = g.abs();
                        step = lim.max(0.0);
                    }
                }
            }
            for k in 0..m {
                if w[k] != 0.0 {
                    let j = self.head[k];
                    self.x[j] -= w[k] * dir * step;
                }
            }
            self.x[q] += dir * step;
            self.iterations += 1;
            if leave == NONE {
                self.status[q] = if dir > 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                degenerate = 0;
                continue;
            }
            let r = leave;
            let jout = self.head[r];
            let g = -w[r] * dir;
            let (st_out, val_out) = if g < 0.0 {
                (VarStatus::AtLower, self.lb[jout])
            } else {
                (VarStatus::AtUpper, self.ub[jout])
            };
            self.x[jout] = val_out;

            rho_pos.iter_mut().for_each(|v| *v = 0.0);
            rho_pos[r] = 1.0;
            self.lu.btran(&mut rho_pos, &mut rho);
            self.pivot_row(&rho, &mut alpha, &mut mag, &mut seen, &mut touched);
            let theta_d = self.d[q] / w[r];
            for &j in &touched {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] -= theta_d * alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[jout] = -theta_d;
            self.status[jout] = st_out;
            self.status[q] = VarStatus::Basic;
            self.pos[jout] = NONE;
            self.pos[q] = r;
            self.head[r] = q;
            self.lu.update(r, &w);
            if step.abs() < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }
}

fn merge_terms(terms: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = terms.collect();
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

fn initial_status(lb: f64, ub: f64, cost: f64) -> VarStatus {
    if cost < 0.0 && ub.is_finite() {
        VarStatus::AtUpper
    } else if lb.is_finite() {
        VarStatus::AtLower
    } else if ub.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}

fn nonbasic_value(st: VarStatus, lb: f64, ub: f64, current: f64) -> f64 {
    match st {
        VarStatus::AtLower => lb,
        VarStatus::AtUpper => ub,
        _ => current.clamp(lb, ub),
    }
}

/// `min_r y.r - max_x (A^T y).x` over the row and column boxes; infinite
/// bounds paired with negligible multipliers are ignored.
pub(crate) fn certificate_margin(
    rows: impl Iterator<Item = (f64, f64, f64)>,
    cols: impl Iterator<Item = (f64, f64, f64)>,
) -> f64 {
    const NEGLIGIBLE: f64 = 1e-9;
    let mut h = 0.0;
    for (yi, lo, hi) in rows {
        if yi > 0.0 {
            if lo.is_finite() {
                h += yi * lo;
            } else if yi > NEGLIGIBLE {
                return f64::NEG_INFINITY;
            }
        } else if yi < 0.0 {
            if hi.is_finite() {
                h += yi * hi;
            } else if yi < -NEGLIGIBLE {
                return f64::NEG_INFINITY;
            }
        }
    }
    for (vj, l, u) in cols {
        if vj > 0.0 {
            if u.is_finite() {
                h -= vj * u;
            } else if vj > NEGLIGIBLE {
                return f64::NEG_INFINITY;
            }
        } else if vj < 0.0 {
            if l.is_finite() {
                h -= vj * l;
            } else if vj < -NEGLIGIBLE {
                return f64::NEG_INFINITY;
            }
        }
    }
    h
}
