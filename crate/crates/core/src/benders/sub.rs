use ducap_lp::{branch_and_bound_ranked, LinearModel, LpStatus, MilpOptions, MilpSolution, Simplex};

use super::cuts::{self, BendersCut, CutError};
use crate::formulation::{add_scenario_block, CapacityLink, Formulation, ScenarioBlock};
use crate::model::ProblemInstance;

/// Scenario-`s` slice with capacities as right-hand-side data:
/// minimise mean latency subject to the scenario block at `p_hat`.
pub fn build_subproblem(inst: &ProblemInstance, s: usize, p_hat: &[f64], form: Formulation) -> (LinearModel, ScenarioBlock) {
    let mut m = LinearModel::new();
    let w = 1.0 / inst.users as f64;
    let block = add_scenario_block(&mut m, inst, s, CapacityLink::Fixed(p_hat), w, form);
    (m, block)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, duals: Vec<f64> },
    Infeasible { ray: Vec<f64> },
    Failed(String),
}

/// A scenario subproblem kept warm across iterations.
pub struct Subproblem {
    pub scenario: usize,
    pub model: LinearModel,
    pub block: ScenarioBlock,
    simplex: Simplex,
    binaries: Vec<usize>,
    priority: Vec<u8>,
    p_hat: Vec<f64>,
}

impl Subproblem {
    pub fn new(inst: &ProblemInstance, s: usize, p_hat: &[f64], form: Formulation) -> Subproblem {
        let (model, block) = build_subproblem(inst, s, p_hat, form);
        let simplex = Simplex::new(&model);
        let binaries: Vec<usize> = block.binaries.iter().map(|v| v.0).collect();
        let priority = binaries.iter().map(|&j| model.vars[j].priority).collect();
        Subproblem { scenario: s, model, block, simplex, binaries, priority, p_hat: p_hat.to_vec() }
    }

    pub fn capacity(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn set_capacity(&mut self, p: &[f64]) {
        for (u, c) in self.block.capacity_rows.iter().enumerate() {
            self.model.con_mut(*c).rhs = p[u];
            self.simplex.set_row_bounds(c.0, f64::NEG_INFINITY, p[u]);
        }
        self.p_hat.clear();
        self.p_hat.extend_from_slice(p);
    }

    pub fn solve_lp(&mut self) -> LpOutcome {
        let mut status = self.simplex.solve();
        if !matches!(status, LpStatus::Optimal | LpStatus::Infeasible)
            || (status == LpStatus::Infeasible && self.simplex.farkas().is_none())
        {
            self.simplex.reset_to_slack_basis();
            status = self.simplex.solve();
        }
        match status {
            LpStatus::Optimal => LpOutcome::Optimal {
                value: self.simplex.objective(),
                duals: self.simplex.duals().to_vec(),
            },
            LpStatus::Infeasible => match self.simplex.farkas() {
                Some(ray) => LpOutcome::Infeasible { ray: ray.to_vec() },
                None => LpOutcome::Failed("infeasible without certificate".into()),
            },
            other => LpOutcome::Failed(format!("relaxation ended with {other:?}")),
        }
    }

    pub fn solve_milp(&mut self, opts: &MilpOptions) -> MilpSolution {
        branch_and_bound_ranked(&mut self.simplex, &self.binaries, &self.priority, opts)
    }

    pub fn optimality_cut(&self, duals: &[f64], sp_objective: f64, iteration: usize) -> Result<BendersCut, CutError> {
        cuts::optimality_cut(&self.model, &self.block, duals, &self.p_hat, sp_objective, iteration)
    }

    pub fn feasibility_cut(&self, ray: &[f64], iteration: usize) -> Result<BendersCut, CutError> {
        cuts::feasibility_cut(&self.model, &self.block, ray, &self.p_hat, iteration)
    }
}
