//! Algebraic model container: variables, linear constraints and a linear objective.

use std::collections::HashSet;
use std::fmt;

use crate::error::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: Option<String>,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
    pub obj: f64,
    /// Branching rank for binaries; lower ranks are branched on first.
    pub priority: u8,
}

impl Variable {
    pub fn continuous(lb: f64, ub: f64) -> Self {
        Variable {
            name: None,
            lb,
            ub,
            kind: VarKind::Continuous,
            obj: 0.0,
            priority: 0,
        }
    }

    pub fn binary() -> Self {
        Variable {
            name: None,
            lb: 0.0,
            ub: 1.0,
            kind: VarKind::Binary,
            obj: 0.0,
            priority: 0,
        }
    }

    pub fn with_obj(mut self, obj: f64) -> Self {
        self.obj = obj;
        self
    }

    pub fn with_priority(mut self, priority: u8) -> Self {
        self.priority = priority;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: Option<String>,
    /// Family label used for census and cut bookkeeping.
    pub tag: Option<String>,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Constraint {
            name: None,
            tag: None,
            terms,
            sense,
            rhs,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    /// Row activity bounds `[lo, hi]` implied by sense and right-hand side.
    pub fn row_bounds(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

/// A minimisation model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearModel {
    pub vars: Vec<Variable>,
    pub cons: Vec<Constraint>,
    pub obj_offset: f64,
}

/// A violated row or bound found by [`LinearModel::check_point`].
#[derive(Debug, Clone, PartialEq)]
pub enum PointViolation {
    Bound {
        var: VarId,
        value: f64,
        lb: f64,
        ub: f64,
    },
    Integrality {
        var: VarId,
        value: f64,
    },
    Row {
        con: ConId,
        activity: f64,
        lo: f64,
        hi: f64,
    },
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn add_var(&mut self, var: Variable) -> VarId {
        self.vars.push(var);
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(&mut self, con: Constraint) -> ConId {
        self.cons.push(con);
        ConId(self.cons.len() - 1)
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.vars[id.0]
    }

    pub fn con(&self, id: ConId) -> &Constraint {
        &self.cons[id.0]
    }

    pub fn con_mut(&mut self, id: ConId) -> &mut Constraint {
        &mut self.cons[id.0]
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| VarId(j))
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_offset
            + self
                .vars
                .iter()
                .zip(x)
                .map(|(v, xi)| v.obj * xi)
                .sum::<f64>()
    }

    pub fn row_activity(&self, con: ConId, x: &[f64]) -> f64 {
        self.cons[con.0]
            .terms
            .iter()
            .map(|&(v, a)| a * x[v.0])
            .sum()
    }

    /// Structural checks: finite coefficients, ordered bounds, known ids, unique names.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.vars.len();
        let mut names = HashSet::new();
        for (j, v) in self.vars.iter().enumerate() {
            if v.lb.is_nan()
                || v.ub.is_nan()
                || v.lb > v.ub
                || v.lb == f64::INFINITY
                || v.ub == f64::NEG_INFINITY
            {
                return Err(LpError::InvalidModel(format!(
                    "variable {j} has bounds [{}, {}]",
                    v.lb, v.ub
                )));
            }
            if !v.obj.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "variable {j} has objective {}",
                    v.obj
                )));
            }
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return Err(LpError::InvalidModel(format!(
                    "binary variable {j} has bounds [{}, {}]",
                    v.lb, v.ub
                )));
            }
            if let Some(name) = &v.name {
                if !names.insert(name.as_str()) {
                    return Err(LpError::InvalidModel(format!("duplicate name {name}")));
                }
            }
        }
        for (i, c) in self.cons.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "constraint {i} has rhs {}",
                    c.rhs
                )));
            }
            for &(v, a) in &c.terms {
                if v.0 >= n {
                    return Err(LpError::InvalidModel(format!(
                        "constraint {i} references unknown variable {}",
                        v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "constraint {i} has coefficient {a}"
                    )));
                }
            }
            if let Some(name) = &c.name {
                if !names.insert(name.as_str()) {
                    return Err(LpError::InvalidModel(format!("duplicate name {name}")));
                }
            }
        }
        Ok(())
    }

    /// Every bound, integrality and row violation of `x` beyond `tol`.
    pub fn check_point(&self, x: &[f64], tol: f64) -> Vec<PointViolation> {
        let mut out = Vec::new();
        for (j, v) in self.vars.iter().enumerate() {
            let xj = x[j];
            if xj < v.lb - tol || xj > v.ub + tol {
                out.push(PointViolation::Bound {
                    var: VarId(j),
                    value: xj,
                    lb: v.lb,
                    ub: v.ub,
                });
            }
            if v.kind == VarKind::Binary && (xj - xj.round()).abs() > tol {
                out.push(PointViolation::Integrality {
                    var: VarId(j),
                    value: xj,
                });
            }
        }
        for (i, c) in self.cons.iter().enumerate() {
            let act = self.row_activity(ConId(i), x);
            let (lo, hi) = c.row_bounds();
            if act < lo - tol || act > hi + tol {
                out.push(PointViolation::Row {
                    con: ConId(i),
                    activity: act,
                    lo,
                    hi,
                });
            }
        }
        out
    }

    /// Number of constraints carrying each tag, in first-seen order.
    pub fn tag_census(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for c in &self.cons {
            if let Some(t) = &c.tag {
                match out.iter_mut().find(|(k, _)| k == t) {
                    Some((_, n)) => *n += 1,
                    None => out.push((t.clone(), 1)),
                }
            }
        }
        out
    }
}

/// Copy of `model` with every binary turned continuous on `[0, 1]`.
pub fn relax(model: &LinearModel) -> LinearModel {
    let mut out = model.clone();
    for v in &mut out.vars {
        v.kind = VarKind::Continuous;
    }
    out
}
