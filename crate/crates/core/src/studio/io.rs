use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::model::ProblemInstance;

/// Shape problems only; value checks live in `validate_instance`.
pub fn check_dimensions(inst: &ProblemInstance) -> Vec<String> {
    let t = &inst.topology;
    let mut errs = Vec::new();
    let shape = |errs: &mut Vec<String>, name: &str, got: (usize, usize), want: (usize, usize)| {
        if got != want {
            errs.push(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1));
        }
    };
    shape(&mut errs, "topology.zeta", t.zeta.shape(), (t.n_ru, t.n_du));
    shape(&mut errs, "topology.eta", t.eta.shape(), (t.n_du, t.n_cu));
    shape(&mut errs, "topology.dist_ru", t.dist_ru.shape(), (t.n_ru, t.n_du));
    for (k, sc) in inst.scenarios.iter().enumerate() {
        shape(&mut errs, &format!("scenarios[{k}].phi"), sc.coverage.shape(), (inst.users, t.n_ru));
        if sc.delay_budget.len() != inst.users {
            errs.push(format!("scenarios[{k}].pi has {} entries, expected {}", sc.delay_budget.len(), inst.users));
        }
        if sc.traffic.len() != inst.users {
            errs.push(format!("scenarios[{k}].omega has {} entries, expected {}", sc.traffic.len(), inst.users));
        }
    }
    errs
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    let inst: ProblemInstance = serde_json::from_str(text).map_err(|e| CoreError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let errs = check_dimensions(&inst);
    if !errs.is_empty() {
        return Err(CoreError::InvalidInstance(errs.join("; ")));
    }
    Ok(inst)
}

/// Canonical text form: pretty JSON in struct field order with a trailing newline.
pub fn instance_to_json(inst: &ProblemInstance) -> String {
    let mut s = serde_json::to_string_pretty(inst).expect("instance serialises");
    s.push('\n');
    s
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, instance_to_json(inst))?;
    Ok(())
}

/// Header row from the record type's field names, then one row per record.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
