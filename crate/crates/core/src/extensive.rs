//! Deterministic-equivalent MILP over all scenarios, and the fixed-capacity baseline.

use std::time::Instant;

use ducap_lp::{solve_milp, LinearModel, MilpOptions, MilpStatus, VarId, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::eval::{evaluate_assignment, validate_instance};
use crate::formulation::{add_scenario_block, block_assignment, CapacityLink, Formulation, ScenarioBlock};
use crate::model::{PlanSolution, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    #[default]
    Full,
    /// Minimise total provisioned capacity only.
    CapacityOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapOpen,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapOpen => "gap-open",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtensiveOptions {
    pub formulation: Formulation,
    pub objective: ObjectiveMode,
    pub milp: MilpOptions,
}

impl Default for ExtensiveOptions {
    fn default() -> Self {
        ExtensiveOptions {
            formulation: Formulation::default(),
            objective: ObjectiveMode::Full,
            milp: MilpOptions::default(),
        }
    }
}

/// Model variable ids of every symbol family.
#[derive(Debug, Clone)]
pub struct VariableCatalog {
    /// Empty when capacities are fixed data.
    pub p: Vec<VarId>,
    pub blocks: Vec<ScenarioBlock>,
}

#[derive(Debug, Clone)]
pub struct ExtensiveOutcome {
    pub status: SolveStatus,
    pub solution: Option<PlanSolution>,
    /// Optimum of the solved model; differs from the plan cost only in
    /// capacity-only mode.
    pub model_objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub wall_millis: f64,
}

fn check_valid(inst: &ProblemInstance) -> Result<()> {
    let rep = validate_instance(inst);
    if rep.is_valid() {
        Ok(())
    } else {
        Err(CoreError::InvalidInstance(rep.errors.join("; ")))
    }
}

fn latency_weight(inst: &ProblemInstance, mode: ObjectiveMode) -> f64 {
    match mode {
        ObjectiveMode::Full => 1.0 / (inst.n_scenarios() * inst.users) as f64,
        ObjectiveMode::CapacityOnly => 0.0,
    }
}

pub fn build_extensive(inst: &ProblemInstance, form: Formulation, mode: ObjectiveMode) -> (LinearModel, VariableCatalog) {
    let mut m = LinearModel::new();
    let n_du = inst.topology.n_du;
    let cap_cost = match mode {
        ObjectiveMode::Full => inst.params.gamma / n_du as f64,
        ObjectiveMode::CapacityOnly => 1.0,
    };
    let p: Vec<VarId> = (0..n_du)
        .map(|u| m.add_var(Variable::continuous(0.0, inst.params.kappa).with_obj(cap_cost).named(format!("p_{u}"))))
        .collect();
    let w = latency_weight(inst, mode);
    let blocks: Vec<ScenarioBlock> = (0..inst.n_scenarios())
        .map(|s| add_scenario_block(&mut m, inst, s, CapacityLink::Variables(&p), w, form))
        .collect();
    if mode == ObjectiveMode::CapacityOnly {
        // without a latency term the DU loads follow from the RU placements,
        // so branch on theta and psi before the user choices
        for b in &blocks {
            for (mat, rank) in [(&b.theta, 0), (&b.psi, 1), (&b.lambda, 2)] {
                for v in mat.as_slice() {
                    m.var_mut(*v).priority = rank;
                }
            }
        }
    }
    (m, VariableCatalog { p, blocks })
}

/// Plan from a solution vector: assignments are read off the binaries and the
/// cost is recomputed from them.
pub fn extract_plan(inst: &ProblemInstance, p: Vec<f64>, blocks: &[ScenarioBlock], values: &[Vec<f64>]) -> PlanSolution {
    let assignments: Vec<_> = blocks.iter().zip(values).map(|(b, x)| block_assignment(b, x)).collect();
    let ev = evaluate_assignment(inst, &p, &assignments, f64::INFINITY);
    PlanSolution { p, assignments, latencies: ev.latencies, cost: ev.cost }
}

fn outcome(status: MilpStatus) -> SolveStatus {
    match status {
        MilpStatus::Optimal => SolveStatus::Optimal,
        MilpStatus::Infeasible => SolveStatus::Infeasible,
        MilpStatus::NodeLimit | MilpStatus::Unbounded => SolveStatus::GapOpen,
    }
}

pub fn solve_extensive(inst: &ProblemInstance, opts: &ExtensiveOptions) -> Result<ExtensiveOutcome> {
    check_valid(inst)?;
    let start = Instant::now();
    let (model, cat) = build_extensive(inst, opts.formulation, opts.objective);
    let sol = solve_milp(&model, &opts.milp)?;
    let solution = sol.x.as_ref().map(|x| {
        let p = cat.p.iter().map(|v| x[v.0].max(0.0)).collect();
        let values = vec![x.clone(); cat.blocks.len()];
        extract_plan(inst, p, &cat.blocks, &values)
    });
    Ok(ExtensiveOutcome {
        status: outcome(sol.status),
        solution,
        model_objective: sol.objective,
        best_bound: sol.best_bound,
        nodes: sol.nodes,
        wall_millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Solve with capacities frozen at `p_fixed` (default `kappa` on every DU).
/// Scenarios decouple, so each is solved on its own.
pub fn solve_fix_du(inst: &ProblemInstance, p_fixed: Option<&[f64]>, opts: &ExtensiveOptions) -> Result<ExtensiveOutcome> {
    check_valid(inst)?;
    let start = Instant::now();
    let n_du = inst.topology.n_du;
    let p: Vec<f64> = match p_fixed {
        Some(p) if p.len() != n_du => {
            return Err(CoreError::InvalidInstance(format!("expected {n_du} fixed capacities, got {}", p.len())))
        }
        Some(p) => p.to_vec(),
        None => vec![inst.params.kappa; n_du],
    };
    if p.iter().any(|&v| !(0.0..=inst.params.kappa).contains(&v)) {
        return Err(CoreError::InvalidInstance("fixed capacities must lie in [0, kappa]".into()));
    }
    let w = latency_weight(inst, opts.objective);
    let mut blocks = Vec::new();
    let mut values = Vec::new();
    let mut nodes = 0;
    let mut total = 0.0;
    let mut status = SolveStatus::Optimal;
    for s in 0..inst.n_scenarios() {
        let mut m = LinearModel::new();
        let block = add_scenario_block(&mut m, inst, s, CapacityLink::Fixed(&p), w, opts.formulation);
        let sol = solve_milp(&m, &opts.milp)?;
        nodes += sol.nodes;
        let st = outcome(sol.status);
        if st != SolveStatus::Optimal {
            status = st;
            if st == SolveStatus::Infeasible {
                break;
            }
        }
        total += sol.objective;
        if let Some(x) = sol.x {
            values.push(x);
            blocks.push(block);
        }
    }
    let cap_term: f64 = match opts.objective {
        ObjectiveMode::Full => inst.params.gamma / n_du as f64 * p.iter().sum::<f64>(),
        ObjectiveMode::CapacityOnly => p.iter().sum(),
    };
    let complete = blocks.len() == inst.n_scenarios();
    let solution = complete.then(|| extract_plan(inst, p, &blocks, &values));
    let model_objective = if status == SolveStatus::Infeasible { f64::INFINITY } else { cap_term + total };
    Ok(ExtensiveOutcome {
        status,
        solution,
        model_objective,
        best_bound: model_objective,
        nodes,
        wall_millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::RowFamily;
    use crate::matrix::Matrix;
    use crate::model::{ProblemParams, Scenario, Topology};
    use crate::studio::{generate_instance, GeneratorConfig, ServiceClass, ServiceMix};
    use ducap_lp::{relax, solve_lp, PointViolation};

    /// 1 CU, 2 DUs, 2 RUs; RU r only eligible for DU r unless `cross`.
    fn tiny(cross: bool, cover: &[u8], omega: f64, pi: f64) -> ProblemInstance {
        let mut topo = Topology::standard(1, |_, _| 1.0);
        topo.n_ru = 2;
        topo.zeta = Matrix::from_fn(2, 2, |r, u| u8::from(cross || r == u));
        topo.dist_ru = Matrix::from_fn(2, 2, |r, u| if topo.zeta[(r, u)] == 1 { 2.0 } else { 0.0 });
        let sc = Scenario {
            id: 0,
            coverage: Matrix::from_rows(vec![cover.to_vec()]).unwrap(),
            delay_budget: vec![pi],
            traffic: vec![omega],
        };
        ProblemInstance { params: ProblemParams::default(), topology: topo, users: 1, scenarios: vec![sc] }
    }

    fn solve(inst: &ProblemInstance) -> ExtensiveOutcome {
        solve_extensive(inst, &ExtensiveOptions::default()).unwrap()
    }

    #[test]
    fn variable_count_matches_catalog_rules() {
        // 1 user covered by RU 0 only; cross eligibility gives 2 (x, y) pairs
        let inst = tiny(true, &[1, 0], 20.0, 100.0);
        let (m, cat) = build_extensive(&inst, Formulation::Paper, ObjectiveMode::Full);
        assert_eq!(m.num_vars(), 2 + 1 + 2 + 4 + 4 + 2 * 2);
        assert_eq!(cat.blocks[0].pairs.len(), 2);
    }

    #[test]
    fn census_has_fourteen_families_plus_link_when_tightened() {
        let inst = generate_instance(&GeneratorConfig { users: 4, n_scenarios: 2, ..Default::default() }).unwrap();
        let tags = |form| {
            let (m, _) = build_extensive(&inst, form, ObjectiveMode::Full);
            m.tag_census().into_iter().map(|(t, _)| t).collect::<Vec<_>>()
        };
        let paper = tags(Formulation::Paper);
        assert_eq!(paper.len(), 14);
        for f in RowFamily::STRUCTURAL.iter().chain(&RowFamily::LINEARIZATION) {
            assert!(paper.iter().any(|t| t == f.tag()), "{}", f.tag());
        }
        let tight = tags(Formulation::Tightened);
        assert_eq!(tight.len(), 15);
        assert!(tight.iter().any(|t| t == "link"));
    }

    #[test]
    fn embb_user_takes_the_cheaper_of_both_splits() {
        let inst = tiny(false, &[1, 0], 20.0, 100.0);
        let out = solve(&inst);
        let sol = out.solution.unwrap();
        // both splits by hand with gamma/|U| = 0.005 and one user
        let central = (0.005 * 40.0 + 0.01 * 2.0 + 30.0, 1, 40.0);
        let edge = (0.005 * 120.0 + 0.01 * 2.0 + 0.25, 0, 120.0);
        let best = if central.0 < edge.0 { central } else { edge };
        assert!((out.model_objective - best.0).abs() < 1e-6, "{} vs {}", out.model_objective, best.0);
        assert!((sol.cost.total - best.0).abs() < 1e-6);
        assert_eq!(sol.assignments[0].psi[(0, 0)], best.1);
        assert!((sol.p[0] - best.2).abs() < 1e-6 && sol.p[1].abs() < 1e-6);
    }

    #[test]
    fn urllc_user_is_kept_at_the_edge() {
        let inst = tiny(false, &[1, 0], 20.0, 10.0);
        let sol = solve(&inst).solution.unwrap();
        assert_eq!(sol.assignments[0].psi[(0, 0)], 0);
        assert!((sol.p[0] - 120.0).abs() < 1e-6);
    }

    #[test]
    fn zero_traffic_needs_no_capacity() {
        let inst = tiny(true, &[1, 1], 0.0, 100.0);
        let out = solve(&inst);
        let sol = out.solution.unwrap();
        assert!(sol.p.iter().all(|&p| p.abs() < 1e-9));
        assert!((out.model_objective - sol.cost.latency_term).abs() < 1e-9);
    }

    #[test]
    fn fix_du_with_kappa_and_at_optimum() {
        let inst = generate_instance(&GeneratorConfig { users: 6, n_scenarios: 2, seed: 3, ..Default::default() }).unwrap();
        let opt = solve(&inst);
        let fix = solve_fix_du(&inst, None, &ExtensiveOptions::default()).unwrap();
        let fs = fix.solution.unwrap();
        assert!((fs.cost.capacity_term - 40.96).abs() < 1e-9);
        assert!(opt.model_objective <= fix.model_objective + 1e-9);
        let p_opt = opt.solution.as_ref().unwrap().p.clone();
        let again = solve_fix_du(&inst, Some(&p_opt), &ExtensiveOptions::default()).unwrap();
        assert!((again.model_objective - opt.model_objective).abs() < 1e-6);
    }

    #[test]
    fn fix_du_at_zero_is_infeasible() {
        let inst = generate_instance(&GeneratorConfig { users: 3, n_scenarios: 1, ..Default::default() }).unwrap();
        let out = solve_fix_du(&inst, Some(&[0.0; 4]), &ExtensiveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.solution.is_none());
    }

    #[test]
    fn optimum_is_consistent_and_relaxation_bounds_it() {
        for seed in 0..6 {
            let cfg = GeneratorConfig { users: 5, n_scenarios: 2, seed, ..Default::default() };
            let inst = generate_instance(&cfg).unwrap();
            for form in [Formulation::Paper, Formulation::Tightened] {
                let opts = ExtensiveOptions { formulation: form, ..Default::default() };
                let (model, cat) = build_extensive(&inst, form, ObjectiveMode::Full);
                let milp = solve_milp(&model, &opts.milp).unwrap();
                let x = milp.x.clone().unwrap();
                assert!(model.check_point(&x, 1e-6).iter().all(|v| !matches!(v, PointViolation::Row { .. })));
                for b in &cat.blocks {
                    for pr in &b.pairs {
                        let lam = x[b.lambda[(pr.i, pr.r)].0].round();
                        let th = x[b.theta[(pr.r, pr.u)].0].round();
                        let ps = x[b.psi[(pr.r, pr.u)].0].round();
                        assert!((x[pr.x.0] - lam * th).abs() < 1e-6);
                        assert!((x[pr.y.0] - lam * th * ps).abs() < 1e-6);
                    }
                    for i in 0..inst.users {
                        let served: f64 = b.pairs.iter().filter(|pr| pr.i == i).map(|pr| x[pr.x.0]).sum();
                        assert!((served - 1.0).abs() < 1e-6);
                    }
                }
                let lp = solve_lp(&relax(&model)).unwrap();
                assert!(lp.objective <= milp.objective + 1e-9);
                let sol = solve_extensive(&inst, &opts).unwrap().solution.unwrap();
                let ev = evaluate_assignment(&inst, &sol.p, &sol.assignments, 1e-6);
                assert!(ev.is_feasible(), "{:?}", ev.violations);
                assert!((sol.cost.total - milp.objective).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn urllc_only_instance_never_offloads() {
        let cfg = GeneratorConfig { users: 5, n_scenarios: 2, mix: ServiceMix::only(ServiceClass::Urllc), ..Default::default() };
        let inst = generate_instance(&cfg).unwrap();
        let sol = solve(&inst).solution.unwrap();
        assert!(sol.assignments.iter().all(|a| a.psi.as_slice().iter().zip(a.theta.as_slice()).all(|(p, t)| p * t == 0)));
    }
}
