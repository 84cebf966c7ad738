//! One-shot LP solves and certificate checks against a [`LinearModel`].

use crate::error::LpError;
use crate::model::LinearModel;
use crate::simplex::{certificate_margin, LpStatus, Simplex};

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    /// Derivative of the optimum with respect to each row's right-hand side.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Row multipliers proving infeasibility; see [`farkas_margin`].
    pub farkas: Option<Vec<f64>>,
    /// Improving direction over the columns when unbounded.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn from_simplex(s: &Simplex) -> LpSolution {
        let status = s.status().unwrap_or(LpStatus::IterationLimit);
        let objective = match status {
            LpStatus::Optimal => s.objective(),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::IterationLimit => f64::NAN,
        };
        LpSolution {
            status,
            objective,
            x: s.primal().to_vec(),
            row_activity: s.row_activities().to_vec(),
            duals: s.duals().to_vec(),
            reduced_costs: s.reduced_costs().to_vec(),
            farkas: s.farkas().map(<[f64]>::to_vec),
            ray: s.primal_ray().map(<[f64]>::to_vec),
            iterations: s.iterations(),
        }
    }
}

/// Solve a continuous model. Models with binaries are rejected; see [`crate::relax`].
pub fn solve_lp(model: &LinearModel) -> Result<LpSolution, LpError> {
    model.validate()?;
    if model.has_binaries() {
        return Err(LpError::HasBinaries);
    }
    let mut s = Simplex::new(model);
    s.solve();
    Ok(LpSolution::from_simplex(&s))
}

/// `min_r y.r - max_x (A^T y).x` over the model's bound boxes. A positive
/// value certifies that no point satisfies all rows and bounds.
pub fn farkas_margin(model: &LinearModel, y: &[f64]) -> f64 {
    let mut v = vec![0.0; model.num_vars()];
    for (c, &yi) in model.cons.iter().zip(y) {
        if yi != 0.0 {
            for &(var, a) in &c.terms {
                v[var.0] += yi * a;
            }
        }
    }
    let rows = model.cons.iter().zip(y).map(|(c, &yi)| {
        let (lo, hi) = c.row_bounds();
        (yi, lo, hi)
    });
    let cols = model
        .vars
        .iter()
        .zip(&v)
        .map(|(var, &vj)| (vj, var.lb, var.ub));
    certificate_margin(rows, cols)
}

/// Lagrangian dual bound `min_{x in box, r in rows} c.x - y.(A x - r)` for row
/// multipliers `y`. Equals the optimum when `y` is an optimal dual vector.
pub fn dual_objective(model: &LinearModel, y: &[f64]) -> f64 {
    let mut d: Vec<f64> = model.vars.iter().map(|v| v.obj).collect();
    let mut total = model.obj_offset;
    for (c, &yi) in model.cons.iter().zip(y) {
        if yi == 0.0 {
            continue;
        }
        for &(var, a) in &c.terms {
            d[var.0] -= yi * a;
        }
        let (lo, hi) = c.row_bounds();
        total += yi * pick_side(yi, lo, hi);
    }
    for (var, &dj) in model.vars.iter().zip(&d) {
        if dj != 0.0 {
            total += dj * pick_side(dj, var.lb, var.ub);
        }
    }
    total
}

/// Bound attaining `min m * v` over `[lo, hi]`; a negligible multiplier that
/// points at an infinite side is treated as zero and takes the finite one.
fn pick_side(mult: f64, lo: f64, hi: f64) -> f64 {
    const NEGLIGIBLE: f64 = 1e-9;
    let (want, other) = if mult > 0.0 { (lo, hi) } else { (hi, lo) };
    if want.is_finite() || mult.abs() > NEGLIGIBLE || !other.is_finite() {
        want
    } else {
        other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, Sense, Variable};

    fn two_var() -> LinearModel {
        // min -x - 2y  s.t. x + y <= 4, x + 3y <= 6, x,y in [0, 10]
        let mut m = LinearModel::new();
        let x = m.add_var(Variable::continuous(0.0, 10.0).with_obj(-1.0).named("x"));
        let y = m.add_var(Variable::continuous(0.0, 10.0).with_obj(-2.0).named("y"));
        m.add_constraint(Constraint::new(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0));
        m.add_constraint(Constraint::new(vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0));
        m
    }

    #[test]
    fn two_variable_optimum_and_duals() {
        let m = two_var();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 5.0).abs() < 1e-9);
        assert!((sol.x[0] - 3.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.duals[0] + 0.5).abs() < 1e-9);
        assert!((sol.duals[1] + 0.5).abs() < 1e-9);
        assert!((dual_objective(&m, &sol.duals) - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows_give_certificate() {
        // x + y >= 5 with x, y in [0, 2]
        let mut m = LinearModel::new();
        let x = m.add_var(Variable::continuous(0.0, 2.0));
        let y = m.add_var(Variable::continuous(0.0, 2.0));
        m.add_constraint(Constraint::new(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 5.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let cert = sol.farkas.unwrap();
        assert!(farkas_margin(&m, &cert) > 0.0);
    }

    #[test]
    fn unbounded_direction_improves() {
        let mut m = LinearModel::new();
        let x = m.add_var(Variable::continuous(0.0, f64::INFINITY).with_obj(-1.0));
        let y = m.add_var(Variable::continuous(0.0, f64::INFINITY));
        m.add_constraint(Constraint::new(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let ray = sol.ray.unwrap();
        assert!(-ray[0] < 0.0);
        assert!(ray[0] - ray[1] <= 1e-9);
    }

    #[test]
    fn rejects_binaries() {
        let mut m = LinearModel::new();
        m.add_var(Variable::binary());
        assert_eq!(solve_lp(&m).unwrap_err(), LpError::HasBinaries);
    }

    #[test]
    fn free_variable_and_equalities() {
        // min x + y, x free, x - y = -3, y in [1, 5]  -> y = 1, x = -2
        let mut m = LinearModel::new();
        let x = m.add_var(Variable::continuous(f64::NEG_INFINITY, f64::INFINITY).with_obj(1.0));
        let y = m.add_var(Variable::continuous(1.0, 5.0).with_obj(1.0));
        m.add_constraint(Constraint::new(vec![(x, 1.0), (y, -1.0)], Sense::Eq, -3.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9, "{}", sol.objective);
    }
}
