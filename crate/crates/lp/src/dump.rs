//! Human-readable LP-format dump, for debugging model builders.

use std::fmt::Write;

use crate::model::{LinearModel, VarKind};

fn var_name(model: &LinearModel, j: usize) -> String {
    model.vars[j]
        .name
        .clone()
        .unwrap_or_else(|| format!("x{j}"))
}

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {name}", -coef);
    } else if first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

pub fn to_lp_string(model: &LinearModel) -> String {
    let mut out = String::from("Minimize\n obj:");
    let mut first = true;
    for (j, v) in model.vars.iter().enumerate() {
        if v.obj != 0.0 {
            term(&mut out, first, v.obj, &var_name(model, j));
            first = false;
        }
    }
    if model.obj_offset != 0.0 {
        let _ = write!(out, " + {}", model.obj_offset);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.cons.iter().enumerate() {
        let name = c.name.clone().unwrap_or_else(|| format!("c{i}"));
        let _ = write!(out, " {name}:");
        for (k, &(v, a)) in c.terms.iter().enumerate() {
            term(&mut out, k == 0, a, &var_name(model, v.0));
        }
        let _ = writeln!(out, " {} {}", c.sense, c.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.vars.iter().enumerate() {
        let name = var_name(model, j);
        match (v.lb.is_finite(), v.ub.is_finite()) {
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", v.lb, v.ub);
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {}", v.lb);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", v.ub);
            }
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    let bins: Vec<String> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| var_name(model, j))
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}
