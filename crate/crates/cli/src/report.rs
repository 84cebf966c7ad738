use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use ducap_core::{
    run_benders, solve_extensive, solve_fix_du, BendersOptions, ExtensiveOptions, PlanSolution, ProblemInstance,
    SolveStatus,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Milp,
    Bd,
    Abd,
    Fixdu,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Milp, Method::Bd, Method::Abd, Method::Fixdu];

    pub fn name(self) -> &'static str {
        match self {
            Method::Milp => "milp",
            Method::Bd => "bd",
            Method::Abd => "abd",
            Method::Fixdu => "fixdu",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| anyhow!("unknown method '{s}' (expected milp, bd, abd or fixdu)"))
    }
}

/// Solver knobs shared by `solve`, `compare` and `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Overrides the instance's gamma when set.
    pub gamma: Option<f64>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub parallel_sp: bool,
    /// Share of the Benders gap the master MILP may leave open.
    pub master_gap: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        let b = BendersOptions::default();
        SolveSettings {
            gamma: None,
            epsilon: b.epsilon,
            max_iter: b.max_iter,
            parallel_sp: false,
            master_gap: b.master_gap,
        }
    }
}

/// One CSV row per solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub method: Method,
    pub objective: Option<f64>,
    pub capacity_term: Option<f64>,
    pub latency_term: Option<f64>,
    pub wall_millis: f64,
    pub iterations: Option<usize>,
    pub cuts_added: Option<usize>,
    pub cuts_filtered: Option<usize>,
    pub status: &'static str,
}

impl RunReport {
    pub const HEADER: [&'static str; 9] = [
        "method",
        "objective",
        "capacity_term",
        "latency_term",
        "wall_millis",
        "iterations",
        "cuts_added",
        "cuts_filtered",
        "status",
    ];

    fn new(method: Method, status: SolveStatus, solution: Option<&PlanSolution>, wall_millis: f64) -> Self {
        let cost = solution.map(|s| s.cost);
        RunReport {
            method,
            // summed here so the row satisfies objective = capacity + latency exactly
            objective: cost.map(|c| c.capacity_term + c.latency_term),
            capacity_term: cost.map(|c| c.capacity_term),
            latency_term: cost.map(|c| c.latency_term),
            wall_millis,
            iterations: None,
            cuts_added: None,
            cuts_filtered: None,
            status: status.as_str(),
        }
    }

    pub fn is_gap_open(&self) -> bool {
        self.status == SolveStatus::GapOpen.as_str()
    }
}

pub fn apply_settings(inst: &ProblemInstance, settings: &SolveSettings) -> ProblemInstance {
    let mut inst = inst.clone();
    if let Some(g) = settings.gamma {
        inst.params.gamma = g;
    }
    inst
}

/// Solve `inst` with `method`. Solver failures come back as errors; gap-open
/// and infeasible outcomes are ordinary reports.
pub fn run_method(
    inst: &ProblemInstance,
    method: Method,
    settings: &SolveSettings,
) -> Result<(RunReport, Option<PlanSolution>)> {
    if !(0.0..1.0).contains(&settings.master_gap) {
        bail!("master gap share must lie in [0, 1), got {}", settings.master_gap);
    }
    let inst = apply_settings(inst, settings);
    match method {
        Method::Milp | Method::Fixdu => {
            let opts = ExtensiveOptions::default();
            let out = if method == Method::Milp {
                solve_extensive(&inst, &opts)?
            } else {
                solve_fix_du(&inst, None, &opts)?
            };
            let report = RunReport::new(method, out.status, out.solution.as_ref(), out.wall_millis);
            Ok((report, out.solution))
        }
        Method::Bd | Method::Abd => {
            let base = if method == Method::Abd { BendersOptions::abd() } else { BendersOptions::default() };
            let opts = BendersOptions {
                epsilon: settings.epsilon,
                max_iter: settings.max_iter,
                parallel_sp: settings.parallel_sp,
                master_gap: settings.master_gap,
                ..base
            };
            let res = run_benders(&inst, &opts)?;
            let mut report = RunReport::new(method, res.status, res.solution.as_ref(), res.wall_millis);
            report.iterations = Some(res.iterations);
            report.cuts_added = Some(res.cuts_added());
            report.cuts_filtered = Some(res.cuts_filtered());
            Ok((report, res.solution))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ducap_core::studio::{generate_instance, GeneratorConfig};

    fn instance(seed: u64) -> ProblemInstance {
        generate_instance(&GeneratorConfig { users: 6, n_scenarios: 2, seed, ..Default::default() }).unwrap()
    }

    #[test]
    fn method_names_parse_case_insensitively() {
        for m in Method::ALL {
            assert_eq!(m.name().to_uppercase().parse::<Method>().unwrap(), m);
        }
        assert!("simplex".parse::<Method>().is_err());
    }

    #[test]
    fn objective_is_sum_of_terms() {
        let inst = instance(3);
        for m in Method::ALL {
            let (r, _) = run_method(&inst, m, &SolveSettings::default()).unwrap();
            let (o, c, l) = (r.objective.unwrap(), r.capacity_term.unwrap(), r.latency_term.unwrap());
            assert!((o - (c + l)).abs() <= 1e-9, "{m}: {o} vs {c} + {l}");
            assert!(["optimal", "gap-open", "infeasible"].contains(&r.status));
        }
    }

    #[test]
    fn gamma_override_scales_capacity_term() {
        let inst = instance(4);
        let s = SolveSettings { gamma: Some(0.02), ..Default::default() };
        let (r, _) = run_method(&inst, Method::Fixdu, &s).unwrap();
        // every DU at kappa: gamma * kappa
        assert!((r.capacity_term.unwrap() - 0.02 * 4096.0).abs() < 1e-9);
    }

    #[test]
    fn benders_reports_carry_counters() {
        let inst = instance(5);
        let (r, _) = run_method(&inst, Method::Abd, &SolveSettings::default()).unwrap();
        assert!(r.iterations.unwrap() >= 1);
        assert!(r.cuts_added.is_some() && r.cuts_filtered.is_some());
        let (r, _) = run_method(&inst, Method::Milp, &SolveSettings::default()).unwrap();
        assert_eq!(r.iterations, None);
    }

    #[test]
    fn master_gap_share_is_validated() {
        let inst = instance(6);
        let loose = SolveSettings { master_gap: 0.2, ..Default::default() };
        let (a, _) = run_method(&inst, Method::Bd, &loose).unwrap();
        let (b, _) = run_method(&inst, Method::Bd, &SolveSettings::default()).unwrap();
        assert!((a.objective.unwrap() - b.objective.unwrap()).abs() <= 1e-6);
        assert!(run_method(&inst, Method::Bd, &SolveSettings { master_gap: 1.0, ..Default::default() }).is_err());
    }
}
