//! Brute-force reference solvers and random model generation for tests.
#![allow(dead_code)]

use ducap_lp::{Constraint, LinearModel, Sense, VarId, VarKind, Variable};
use rand::Rng;

/// Minimum of the objective over all feasible vertices of a model with finite
/// variable bounds. `fixed` pins variables to values and removes them.
pub fn vertex_min(model: &LinearModel, fixed: &[Option<f64>]) -> Option<f64> {
    let free: Vec<usize> = (0..model.num_vars())
        .filter(|&j| fixed[j].is_none())
        .collect();
    let n = free.len();
    let local: Vec<Option<usize>> = {
        let mut v = vec![None; model.num_vars()];
        for (k, &j) in free.iter().enumerate() {
            v[j] = Some(k);
        }
        v
    };
    // Rows as (coeffs over free vars, lo, hi) after substituting fixed values.
    let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let mut offset = model.obj_offset;
    for (j, v) in model.vars.iter().enumerate() {
        if let Some(val) = fixed[j] {
            offset += v.obj * val;
        }
    }
    for c in &model.cons {
        let mut a = vec![0.0; n];
        let mut shift = 0.0;
        for &(v, coef) in &c.terms {
            match local[v.0] {
                Some(k) => a[k] += coef,
                None => shift += coef * fixed[v.0].unwrap(),
            }
        }
        let (lo, hi) = c.row_bounds();
        rows.push((a, lo - shift, hi - shift));
    }
    let obj: Vec<f64> = free.iter().map(|&j| model.vars[j].obj).collect();
    let lbs: Vec<f64> = free.iter().map(|&j| model.vars[j].lb).collect();
    let ubs: Vec<f64> = free.iter().map(|&j| model.vars[j].ub).collect();

    let feasible = |x: &[f64]| -> bool {
        for k in 0..n {
            if x[k] < lbs[k] - 1e-9 || x[k] > ubs[k] + 1e-9 {
                return false;
            }
        }
        rows.iter().all(|(a, lo, hi)| {
            let act: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            act >= lo - 1e-9 && act <= hi + 1e-9
        })
    };
    if n == 0 {
        return if feasible(&[]) { Some(offset) } else { None };
    }

    // Candidate hyperplanes: each finite row side and each variable bound.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, lo, hi) in &rows {
        if lo.is_finite() {
            planes.push((a.clone(), *lo));
        }
        if hi.is_finite() && hi != lo {
            planes.push((a.clone(), *hi));
        }
    }
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        planes.push((e.clone(), lbs[k]));
        if ubs[k] != lbs[k] {
            planes.push((e, ubs[k]));
        }
    }
    let mut best: Option<f64> = None;
    let mut combo: Vec<usize> = (0..n).collect();
    let p = planes.len();
    if p < n {
        return None;
    }
    loop {
        if let Some(x) = solve_square(&combo.iter().map(|&i| &planes[i]).collect::<Vec<_>>(), n) {
            if feasible(&x) {
                let val: f64 = offset + obj.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
                best = Some(best.map_or(val, |b: f64| b.min(val)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] < p - n + i {
                combo[i] += 1;
                for k in i + 1..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(planes: &[&(Vec<f64>, f64)], n: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = planes
        .iter()
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[i][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Exhaustive search over every binary pattern with an LP over the rest.
pub fn enumerate_milp(model: &LinearModel) -> Option<f64> {
    let bins: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let mut fixed = vec![None; model.num_vars()];
        for (k, &j) in bins.iter().enumerate() {
            fixed[j] = Some(((mask >> k) & 1) as f64);
        }
        if let Some(v) = vertex_min(model, &fixed) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// Random boxed model with small integer-ish data. About a tenth of the rows get
/// right-hand sides unrelated to any interior point, so some models are infeasible.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, m: usize, n_bin: usize) -> LinearModel {
    let mut model = LinearModel::new();
    let mut anchor = Vec::new();
    for j in 0..n {
        let obj = rng.gen_range(-5..=5) as f64;
        if j < n_bin {
            model.add_var(Variable::binary().with_obj(obj));
            anchor.push(rng.gen_range(0..=1) as f64);
        } else {
            let lb = -(rng.gen_range(0..=3) as f64);
            let ub = rng.gen_range(1..=5) as f64;
            model.add_var(Variable::continuous(lb, ub).with_obj(obj));
            anchor.push(rng.gen_range(lb..ub));
        }
    }
    for _ in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                let a = rng.gen_range(-5..=5) as f64;
                if a != 0.0 {
                    terms.push((VarId(j), a));
                }
            }
        }
        if terms.is_empty() {
            terms.push((VarId(rng.gen_range(0..n)), 1.0));
        }
        let act: f64 = terms.iter().map(|&(v, a)| a * anchor[v.0]).sum();
        let sense = match rng.gen_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Le,
            _ => Sense::Ge,
        };
        let rhs = if rng.gen_bool(0.1) {
            rng.gen_range(-20..=20) as f64
        } else {
            match sense {
                Sense::Eq => act,
                Sense::Le => act + rng.gen_range(0.0..3.0),
                Sense::Ge => act - rng.gen_range(0.0..3.0),
            }
        };
        let rhs = (rhs * 4.0).round() / 4.0;
        model.add_constraint(Constraint::new(terms, sense, rhs));
    }
    model
}

pub fn is_binary(model: &LinearModel, j: usize) -> bool {
    model.vars[j].kind == VarKind::Binary
}
