use ducap_lp::LinearModel;
use serde::Serialize;

use crate::formulation::{RowFamily, ScenarioBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CutKind {
    Feasibility,
    Optimality,
}

/// Row multipliers of the generating subproblem, grouped by source family.
/// Oriented so that `<=` rows carry non-negative weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualWeights {
    /// `(family, family index, weight)` for every non-zero weight.
    pub entries: Vec<(RowFamily, usize, f64)>,
}

impl DualWeights {
    pub fn family(&self, f: RowFamily) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().filter(move |e| e.0 == f).map(|e| (e.1, e.2))
    }

    /// Smallest weight in the family, 0 if it has none.
    pub fn min_weight(&self, f: RowFamily) -> f64 {
        self.family(f).map(|e| e.1).fold(0.0, f64::min)
    }
}

/// `constant + coeffs . p <= 0` (feasibility) or `<= alpha_s` (optimality).
#[derive(Debug, Clone, PartialEq)]
pub struct BendersCut {
    pub kind: CutKind,
    pub scenario: usize,
    pub iteration: usize,
    pub constant: f64,
    /// One coefficient per DU.
    pub coeffs: Vec<f64>,
    pub weights: DualWeights,
}

impl BendersCut {
    pub fn lhs(&self, p: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(p).map(|(g, x)| g * x).sum::<f64>()
    }

    /// Amount by which `(p, alpha_s)` violates the cut; `alpha_s` is ignored for feasibility cuts.
    pub fn violation(&self, p: &[f64], alpha_s: f64) -> f64 {
        match self.kind {
            CutKind::Feasibility => self.lhs(p),
            CutKind::Optimality => self.lhs(p) - alpha_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CutError {
    /// A multiplier points at an infinite side, so the bound is vacuous.
    UnboundedSide { row: Option<usize>, col: Option<usize>, value: f64 },
    /// The cut does not reproduce the generating solve at `p_hat`.
    Mismatch { cut: f64, reference: f64 },
}

const NEGLIGIBLE: f64 = 1e-7;

/// Side of `[lo, hi]` minimising `m * v`, treating negligible multipliers as zero.
fn min_side(m: f64, lo: f64, hi: f64) -> Result<f64, f64> {
    let (want, other) = if m > 0.0 { (lo, hi) } else { (hi, lo) };
    if want.is_finite() {
        Ok(want)
    } else if m.abs() <= NEGLIGIBLE {
        Ok(if other.is_finite() { other } else { 0.0 })
    } else {
        Err(want)
    }
}

fn weights_of(block: &ScenarioBlock, y: &[f64]) -> DualWeights {
    let entries = block
        .rows
        .iter()
        .filter(|r| y[r.con.0] != 0.0)
        .map(|r| (r.family, r.index, -y[r.con.0]))
        .collect();
    DualWeights { entries }
}

/// Affine form in `p` of either the Lagrangian bound (`farkas = false`,
/// objective included) or the Farkas margin (`farkas = true`) of the scenario
/// model under row multipliers `y`. Capacity row right-hand sides become the
/// `p` coefficients; everything else is folded into the constant.
fn affine_in_p(
    model: &LinearModel,
    block: &ScenarioBlock,
    y: &[f64],
    farkas: bool,
) -> Result<(f64, Vec<f64>), CutError> {
    let n = model.num_vars();
    let mut v = vec![0.0; n];
    let mut is_cap = vec![usize::MAX; model.num_cons()];
    for (u, c) in block.capacity_rows.iter().enumerate() {
        is_cap[c.0] = u;
    }
    let mut constant = if farkas { 0.0 } else { model.obj_offset };
    let mut coeffs = vec![0.0; block.capacity_rows.len()];
    for (i, (c, &yi)) in model.cons.iter().zip(y).enumerate() {
        if yi == 0.0 {
            continue;
        }
        // a wrong-sign multiplier within noise is dropped; any multiplier vector
        // still yields a valid bound, and the caller checks tightness
        if is_cap[i] != usize::MAX {
            // capacity rows are `load <= p_u`
            if yi > 0.0 {
                if yi > NEGLIGIBLE {
                    return Err(CutError::UnboundedSide { row: Some(i), col: None, value: yi });
                }
                continue;
            }
            coeffs[is_cap[i]] += yi;
        } else {
            let (lo, hi) = c.row_bounds();
            let want = if yi > 0.0 { lo } else { hi };
            if !want.is_finite() {
                if yi.abs() > NEGLIGIBLE {
                    return Err(CutError::UnboundedSide { row: Some(i), col: None, value: yi });
                }
                continue;
            }
            constant += yi * want;
        }
        for &(var, a) in &c.terms {
            v[var.0] += yi * a;
        }
    }
    for (j, var) in model.vars.iter().enumerate() {
        if farkas {
            let m = -v[j];
            if m != 0.0 {
                let side = min_side(m, var.lb, var.ub)
                    .map_err(|_| CutError::UnboundedSide { row: None, col: Some(j), value: m })?;
                constant += m * side;
            }
        } else {
            let d = var.obj - v[j];
            if d != 0.0 {
                let side = min_side(d, var.lb, var.ub)
                    .map_err(|_| CutError::UnboundedSide { row: None, col: Some(j), value: d })?;
                constant += d * side;
            }
        }
    }
    Ok((constant, coeffs))
}

fn tol(reference: f64) -> f64 {
    1e-6 * reference.abs().max(1.0)
}

/// Optimality cut from optimal duals `y` of the scenario relaxation at `p_hat`.
/// Fails unless the cut reproduces `sp_objective` at `p_hat`.
pub fn optimality_cut(
    model: &LinearModel,
    block: &ScenarioBlock,
    y: &[f64],
    p_hat: &[f64],
    sp_objective: f64,
    iteration: usize,
) -> Result<BendersCut, CutError> {
    let (constant, coeffs) = affine_in_p(model, block, y, false)?;
    let cut = BendersCut {
        kind: CutKind::Optimality,
        scenario: block.scenario,
        iteration,
        constant,
        coeffs,
        weights: weights_of(block, y),
    };
    let at = cut.lhs(p_hat);
    if (at - sp_objective).abs() > tol(sp_objective) {
        return Err(CutError::Mismatch { cut: at, reference: sp_objective });
    }
    Ok(cut)
}

/// Feasibility cut from a Farkas certificate `y` of the scenario relaxation
/// at `p_hat`. Fails unless `p_hat` violates it.
pub fn feasibility_cut(
    model: &LinearModel,
    block: &ScenarioBlock,
    y: &[f64],
    p_hat: &[f64],
    iteration: usize,
) -> Result<BendersCut, CutError> {
    let (constant, coeffs) = affine_in_p(model, block, y, true)?;
    let cut = BendersCut {
        kind: CutKind::Feasibility,
        scenario: block.scenario,
        iteration,
        constant,
        coeffs,
        weights: weights_of(block, y),
    };
    let at = cut.lhs(p_hat);
    if at <= 0.0 {
        return Err(CutError::Mismatch { cut: at, reference: 0.0 });
    }
    Ok(cut)
}
