//! Sparse LU factorisation of a simplex basis with product-form updates.
//!
//! Rows are constraint indices, columns are basis positions. Singletons are
//! peeled off first; whatever remains is eliminated with threshold Markowitz
//! pivoting.

const ABS_PIVOT_TOL: f64 = 1e-11;
const REL_PIVOT_TOL: f64 = 0.01;
const DROP_TOL: f64 = 1e-14;
const MARKOWITZ_COLUMNS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Basis positions left without a pivot.
    pub positions: Vec<usize>,
    /// Rows left without a pivot.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    diag: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<usize>>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
}

impl Active {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    fn take(&mut self, i: usize, j: usize) -> f64 {
        let row = &mut self.rows[i];
        match row.iter().position(|e| e.0 == j) {
            Some(k) => row.swap_remove(k).1,
            None => 0.0,
        }
    }

    fn unlink_row_from_col(&mut self, i: usize, j: usize) {
        let col = &mut self.cols[j];
        if let Some(k) = col.iter().position(|&r| r == i) {
            col.swap_remove(k);
        }
    }
}

impl LuFactor {
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactor, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut a = Active {
            rows: vec![Vec::new(); m],
            cols: vec![Vec::new(); m],
            row_done: vec![false; m],
            col_done: vec![false; m],
        };
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                if v != 0.0 {
                    a.rows[i].push((j, v));
                    a.cols[j].push(i);
                }
            }
        }
        let mut f = LuFactor {
            m,
            ..Default::default()
        };
        f.l_start.push(0);
        f.u_start.push(0);
        f.eta_start.push(0);

        let mut col_single: Vec<usize> = (0..m).rev().filter(|&j| a.cols[j].len() == 1).collect();
        let mut row_single: Vec<usize> = (0..m).rev().filter(|&i| a.rows[i].len() == 1).collect();

        loop {
            if let Some(j) = col_single.pop() {
                if a.col_done[j] || a.cols[j].len() != 1 {
                    continue;
                }
                let i = a.cols[j][0];
                let v = a.value(i, j);
                if v.abs() < ABS_PIVOT_TOL {
                    continue;
                }
                let row = std::mem::take(&mut a.rows[i]);
                for &(j2, u) in &row {
                    a.unlink_row_from_col(i, j2);
                    if j2 != j {
                        f.u_idx.push(j2);
                        f.u_val.push(u);
                        if !a.col_done[j2] && a.cols[j2].len() == 1 {
                            col_single.push(j2);
                        }
                    }
                }
                f.push_step(i, j, v);
                a.row_done[i] = true;
                a.col_done[j] = true;
                continue;
            }
            if let Some(i) = row_single.pop() {
                if a.row_done[i] || a.rows[i].len() != 1 {
                    continue;
                }
                let (j, v) = a.rows[i][0];
                let col_max = a.cols[j]
                    .iter()
                    .map(|&k| a.value(k, j).abs())
                    .fold(0.0, f64::max);
                if v.abs() < ABS_PIVOT_TOL || v.abs() < REL_PIVOT_TOL * col_max {
                    continue;
                }
                let others: Vec<usize> = a.cols[j].iter().copied().filter(|&k| k != i).collect();
                for k in others {
                    let akj = a.take(k, j);
                    f.l_idx.push(k);
                    f.l_val.push(akj / v);
                    if a.rows[k].len() == 1 {
                        row_single.push(k);
                    }
                }
                a.cols[j].clear();
                a.rows[i].clear();
                f.push_step(i, j, v);
                a.row_done[i] = true;
                a.col_done[j] = true;
                continue;
            }
            break;
        }

        let mut work = vec![usize::MAX; m];
        while f.prow.len() < m {
            let mut active_cols: Vec<usize> = (0..m).filter(|&j| !a.col_done[j]).collect();
            active_cols.sort_by_key(|&j| (a.cols[j].len(), j));
            let mut best: Option<(usize, usize, usize, f64)> = None;
            for &j in active_cols
                .iter()
                .filter(|&&j| !a.cols[j].is_empty())
                .take(MARKOWITZ_COLUMNS)
            {
                let cc = a.cols[j].len();
                let vals: Vec<(usize, f64)> =
                    a.cols[j].iter().map(|&i| (i, a.value(i, j))).collect();
                let cmax = vals.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
                if cmax < ABS_PIVOT_TOL {
                    continue;
                }
                for (i, v) in vals {
                    if v.abs() < REL_PIVOT_TOL * cmax || v.abs() < ABS_PIVOT_TOL {
                        continue;
                    }
                    let cost = (a.rows[i].len() - 1) * (cc - 1);
                    let better = match best {
                        None => true,
                        Some((_, _, bc, bv)) => cost < bc || (cost == bc && v.abs() > bv.abs()),
                    };
                    if better {
                        best = Some((i, j, cost, v));
                    }
                }
            }
            let Some((p, q, _, piv)) = best else {
                // Fall back to scanning every column before declaring singularity.
                let mut fallback = None;
                for &j in &active_cols {
                    for &i in &a.cols[j] {
                        let v = a.value(i, j);
                        if v.abs() >= ABS_PIVOT_TOL
                            && fallback
                                .map_or(true, |(_, _, bv): (usize, usize, f64)| v.abs() > bv.abs())
                        {
                            fallback = Some((i, j, v));
                        }
                    }
                }
                match fallback {
                    Some((i, j, v)) => {
                        f.eliminate(&mut a, &mut work, i, j, v);
                        continue;
                    }
                    None => {
                        return Err(Singular {
                            positions: (0..m).filter(|&j| !a.col_done[j]).collect(),
                            rows: (0..m).filter(|&i| !a.row_done[i]).collect(),
                        });
                    }
                }
            };
            f.eliminate(&mut a, &mut work, p, q, piv);
        }
        Ok(f)
    }

    fn push_step(&mut self, i: usize, j: usize, piv: f64) {
        self.prow.push(i);
        self.pcol.push(j);
        self.diag.push(piv);
        self.l_start.push(self.l_idx.len());
        self.u_start.push(self.u_idx.len());
    }

    fn eliminate(&mut self, a: &mut Active, work: &mut [usize], p: usize, q: usize, piv: f64) {
        let prow = std::mem::take(&mut a.rows[p]);
        for &(j, _) in &prow {
            a.unlink_row_from_col(p, j);
        }
        let others: Vec<usize> = std::mem::take(&mut a.cols[q]);
        for k in others {
            let akq = a.take(k, q);
            let l = akq / piv;
            self.l_idx.push(k);
            self.l_val.push(l);
            for (idx, &(j, _)) in a.rows[k].iter().enumerate() {
                work[j] = idx;
            }
            for &(j, v) in &prow {
                if j == q {
                    continue;
                }
                let w = work[j];
                if w != usize::MAX && w < a.rows[k].len() && a.rows[k][w].0 == j {
                    a.rows[k][w].1 -= l * v;
                } else {
                    let nv = -l * v;
                    if nv.abs() > DROP_TOL {
                        a.rows[k].push((j, nv));
                        a.cols[j].push(k);
                    }
                }
            }
            for &(j, _) in a.rows[k].iter() {
                work[j] = usize::MAX;
            }
        }
        for &(j, u) in &prow {
            if j != q {
                self.u_idx.push(j);
                self.u_val.push(u);
            }
        }
        self.push_step(p, q, piv);
        a.row_done[p] = true;
        a.col_done[q] = true;
    }

    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    /// Solve `B w = b`; `b` is indexed by row and is clobbered, `w` by basis position.
    pub fn ftran(&self, b: &mut [f64], w: &mut [f64]) {
        let steps = self.prow.len();
        for k in 0..steps {
            let bp = b[self.prow[k]];
            if bp != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[t]] -= self.l_val[t] * bp;
                }
            }
        }
        for k in (0..steps).rev() {
            let mut s = b[self.prow[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * w[self.u_idx[t]];
            }
            w[self.pcol[k]] = s / self.diag[k];
        }
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let wr = w[r];
            if wr != 0.0 {
                let wr = wr / self.eta_piv[e];
                w[r] = wr;
                for t in self.eta_start[e]..self.eta_start[e + 1] {
                    w[self.eta_idx[t]] -= self.eta_val[t] * wr;
                }
            }
        }
    }

    /// Solve `B^T y = c`; `c` is indexed by basis position and is clobbered, `y` by row.
    pub fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut s = c[r];
            for t in self.eta_start[e]..self.eta_start[e + 1] {
                s -= self.eta_val[t] * c[self.eta_idx[t]];
            }
            c[r] = s / self.eta_piv[e];
        }
        let steps = self.prow.len();
        for k in 0..steps {
            let z = c[self.pcol[k]] / self.diag[k];
            y[self.prow[k]] = z;
            if z != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[t]] -= self.u_val[t] * z;
                }
            }
        }
        for k in (0..steps).rev() {
            let mut s = y[self.prow[k]];
            for t in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[t] * y[self.l_idx[t]];
            }
            y[self.prow[k]] = s;
        }
    }

    /// Record that basis position `r` now holds a column whose FTRAN image is `alpha`.
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        self.eta_pos.push(r);
        self.eta_piv.push(alpha[r]);
        for (i, &v) in alpha.iter().enumerate() {
            if i != r && v.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(v);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }

    #[allow(dead_code)]
    pub fn dim(&self) -> usize {
        self.m
    }
}
