use ducap_lp::{branch_and_bound_ranked, Constraint, LinearModel, LpStatus, MilpOptions, MilpStatus, Sense, Simplex, VarId, Variable};

use super::cuts::{BendersCut, CutKind};
use crate::formulation::{add_scenario_block, CapacityLink, Formulation};
use crate::model::ProblemInstance;

fn cut_constraint(cut: &BendersCut, p: &[VarId], alpha: &[VarId]) -> Constraint {
    let mut terms: Vec<(VarId, f64)> =
        cut.coeffs.iter().zip(p).filter(|(g, _)| **g != 0.0).map(|(g, v)| (*v, *g)).collect();
    let tag = match cut.kind {
        CutKind::Feasibility => "feas_cut",
        CutKind::Optimality => {
            terms.push((alpha[cut.scenario], -1.0));
            "opt_cut"
        }
    };
    Constraint::new(terms, Sense::Le, -cut.constant).tagged(tag)
}

fn base_master(inst: &ProblemInstance) -> (LinearModel, Vec<VarId>, Vec<VarId>) {
    let mut m = LinearModel::new();
    let n_du = inst.topology.n_du;
    let n_s = inst.n_scenarios();
    let p = (0..n_du)
        .map(|u| {
            m.add_var(
                Variable::continuous(0.0, inst.params.kappa)
                    .with_obj(inst.params.gamma / n_du as f64)
                    .named(format!("p_{u}")),
            )
        })
        .collect();
    let alpha = (0..n_s)
        .map(|s| m.add_var(Variable::continuous(0.0, f64::INFINITY).with_obj(1.0 / n_s as f64).named(format!("alpha_{s}"))))
        .collect();
    (m, p, alpha)
}

/// Capacity variables in `[0, kappa]`, one `alpha_s >= 0` per scenario and
/// every pool cut as a row.
pub fn build_master(inst: &ProblemInstance, pool: &[BendersCut]) -> LinearModel {
    let (mut m, p, alpha) = base_master(inst);
    for cut in pool {
        m.add_constraint(cut_constraint(cut, &p, &alpha));
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum MasterOutcome {
    /// `bound` is a proven lower bound on the master optimum, below `objective`
    /// by at most the MILP gap tolerance.
    Optimal { objective: f64, bound: f64, p: Vec<f64>, alpha: Vec<f64> },
    Infeasible,
    /// No master solution below `milp.cutoff`.
    AboveCutoff,
    Failed(String),
}

/// Master problem kept warm across iterations. Lifted scenarios carry their
/// full block, which makes the master a MILP.
pub struct Master {
    pub model: LinearModel,
    pub p: Vec<VarId>,
    pub alpha: Vec<VarId>,
    simplex: Simplex,
    binaries: Vec<usize>,
    priority: Vec<u8>,
    lifted: Vec<bool>,
    cut_rows: usize,
}

impl Master {
    pub fn new(inst: &ProblemInstance) -> Master {
        let (model, p, alpha) = base_master(inst);
        let simplex = Simplex::new(&model);
        let lifted = vec![false; inst.n_scenarios()];
        Master { model, p, alpha, simplex, binaries: Vec::new(), priority: Vec::new(), lifted, cut_rows: 0 }
    }

    pub fn cut_rows(&self) -> usize {
        self.cut_rows
    }

    pub fn is_lifted(&self, s: usize) -> bool {
        self.lifted[s]
    }

    pub fn lifted(&self) -> Vec<usize> {
        (0..self.lifted.len()).filter(|&s| self.lifted[s]).collect()
    }

    pub fn add_cuts(&mut self, cuts: &[BendersCut]) {
        let mut rows = Vec::with_capacity(cuts.len());
        for cut in cuts {
            let c = cut_constraint(cut, &self.p, &self.alpha);
            rows.push((c.terms.iter().map(|(v, a)| (v.0, *a)).collect(), f64::NEG_INFINITY, c.rhs));
            self.model.add_constraint(c);
        }
        self.simplex.add_rows(&rows);
        self.cut_rows += cuts.len();
    }

    /// Replace `alpha_s` by the exact scenario block. Scenarios identical to
    /// `s` share the same recourse, so one block carries their combined weight.
    pub fn lift(&mut self, inst: &ProblemInstance, s: usize, form: Formulation) {
        if self.lifted[s] {
            return;
        }
        let sc = &inst.scenarios[s];
        let twins: Vec<usize> = (0..inst.n_scenarios())
            .filter(|&q| {
                let o = &inst.scenarios[q];
                !self.lifted[q] && o.traffic == sc.traffic && o.delay_budget == sc.delay_budget && o.coverage == sc.coverage
            })
            .collect();
        let w = twins.len() as f64 / (inst.n_scenarios() * inst.users) as f64;
        let p = self.p.clone();
        add_scenario_block(&mut self.model, inst, s, CapacityLink::Variables(&p), w, form);
        for &q in &twins {
            self.model.var_mut(self.alpha[q]).obj = 0.0;
            self.lifted[q] = true;
        }
        self.simplex = Simplex::new(&self.model);
        self.binaries = self.model.binaries().map(|v| v.0).collect();
        self.priority = self.binaries.iter().map(|&j| self.model.vars[j].priority).collect();
    }

    pub fn solve(&mut self, milp: &MilpOptions) -> MasterOutcome {
        let (objective, bound, x) = if self.binaries.is_empty() {
            match self.simplex.solve() {
                LpStatus::Optimal => (self.simplex.objective(), self.simplex.objective(), self.simplex.primal().to_vec()),
                LpStatus::Infeasible => return MasterOutcome::Infeasible,
                other => return MasterOutcome::Failed(format!("master LP ended with {other:?}")),
            }
        } else {
            let sol = branch_and_bound_ranked(&mut self.simplex, &self.binaries, &self.priority, milp);
            match (sol.status, sol.x) {
                (MilpStatus::Optimal, Some(x)) => (sol.objective, sol.best_bound, x),
                (MilpStatus::Infeasible, _) if milp.cutoff < f64::INFINITY => return MasterOutcome::AboveCutoff,
                (MilpStatus::Infeasible, _) => return MasterOutcome::Infeasible,
                (st, _) => return MasterOutcome::Failed(format!("master MILP ended with {st:?}")),
            }
        };
        let p = self.p.iter().map(|v| x[v.0]).collect();
        let alpha = self.alpha.iter().map(|v| x[v.0]).collect();
        MasterOutcome::Optimal { objective, bound, p, alpha }
    }
}
