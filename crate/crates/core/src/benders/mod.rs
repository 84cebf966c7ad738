//! Benders decomposition: capacity master, per-scenario latency subproblems.
//!
//! Cuts come from the subproblem relaxations. When they stop separating the
//! current master point while the integer recourse is still above its
//! estimate, the worst scenario is lifted into the master as an exact block,
//! which keeps the loop finite and the final gap certified.

mod cuts;
mod master;
mod sub;
mod trace;

use std::time::{Duration, Instant};

use ducap_lp::{MilpOptions, MilpStatus};
use rayon::prelude::*;

pub use cuts::{feasibility_cut, optimality_cut, BendersCut, CutError, CutKind, DualWeights};
pub use master::{build_master, Master, MasterOutcome};
pub use sub::{build_subproblem, LpOutcome, Subproblem};
pub use trace::{BendersTrace, TraceRow};

use crate::abd::{filter_cuts, DominanceRelation, FilterConfig, Retainer};
use crate::error::{CoreError, Result};
use crate::eval::validate_instance;
use crate::extensive::{extract_plan, SolveStatus};
use crate::formulation::Formulation;
use crate::model::{PlanSolution, ProblemInstance};

/// Master capacities are snapped to this grid so that masters differing only
/// in redundant rows hand identical points to the subproblems.
const P_GRID: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BendersOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Dominance filtering of feasibility cuts; `None` is plain Benders.
    pub filter: Option<FilterConfig>,
    pub parallel_sp: bool,
    /// Lift stalled scenarios into the master. Without it a stall ends the run as gap-open.
    pub lifting: bool,
    pub formulation: Formulation,
    /// Share of the current UB - LB gap the master MILP may leave open; 0
    /// solves every master to optimality.
    pub master_gap: f64,
    pub milp: MilpOptions,
    pub time_limit: Option<Duration>,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            epsilon: 1e-6,
            max_iter: 500,
            filter: None,
            parallel_sp: false,
            lifting: true,
            formulation: Formulation::default(),
            master_gap: 0.0,
            milp: MilpOptions::default(),
            time_limit: None,
        }
    }
}

impl BendersOptions {
    pub fn abd() -> Self {
        BendersOptions { filter: Some(FilterConfig::default()), ..Default::default() }
    }
}

/// A dropped feasibility cut and the master cut that implies it.
#[derive(Debug, Clone)]
pub struct FilteredPair {
    pub filtered: BendersCut,
    pub retainer: BendersCut,
}

#[derive(Debug, Clone)]
pub struct BendersResult {
    pub status: SolveStatus,
    pub solution: Option<PlanSolution>,
    pub lb: f64,
    pub ub: f64,
    pub iterations: usize,
    pub trace: BendersTrace,
    /// Every cut added to the master, in insertion order.
    pub pool: Vec<BendersCut>,
    /// Every `p_hat` that spawned a feasibility cut, parallel to `pool`
    /// (`None` for optimality cuts).
    pub spawning_points: Vec<Option<Vec<f64>>>,
    pub filtered: Vec<FilteredPair>,
    pub lifted: Vec<usize>,
    pub wall_millis: f64,
}

impl BendersResult {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn cuts_added(&self) -> usize {
        self.pool.len()
    }

    pub fn cuts_filtered(&self) -> usize {
        self.filtered.len()
    }
}

enum SpResult {
    Cut(BendersCut),
    Quiet,
    Error(String),
}

fn map_subs<T: Send>(subs: &mut [Subproblem], parallel: bool, f: impl Fn(&mut Subproblem) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        subs.par_iter_mut().map(f).collect()
    } else {
        subs.iter_mut().map(f).collect()
    }
}

pub fn run_benders(inst: &ProblemInstance, opts: &BendersOptions) -> Result<BendersResult> {
    let rep = validate_instance(inst);
    if !rep.is_valid() {
        return Err(CoreError::InvalidInstance(rep.errors.join("; ")));
    }
    let start = Instant::now();
    let n_s = inst.n_scenarios();
    let n_du = inst.topology.n_du;
    let kappa = inst.params.kappa;
    let relation = opts.filter.map(|_| DominanceRelation::compute(&inst.scenarios));
    let mut master = Master::new(inst);
    let full = vec![kappa; n_du];
    let mut subs: Vec<Subproblem> = (0..n_s).map(|s| Subproblem::new(inst, s, &full, opts.formulation)).collect();

    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut best: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;
    let mut trace = BendersTrace::default();
    let mut pool: Vec<BendersCut> = Vec::new();
    let mut spawning_points = Vec::new();
    let mut filtered = Vec::new();
    let mut status = SolveStatus::GapOpen;
    let mut iterations = 0;
    let mut exact_master = false;

    for t in 1..=opts.max_iter {
        if opts.time_limit.is_some_and(|lim| start.elapsed() > lim) {
            break;
        }
        iterations = t;
        // the master only needs to be as exact as the current gap; one that
        // cannot beat the incumbent by epsilon proves convergence
        let abs_gap = if exact_master || !(ub - lb).is_finite() {
            opts.milp.abs_gap
        } else {
            (opts.master_gap * (ub - lb)).max(opts.milp.abs_gap)
        };
        exact_master = false;
        // the margin keeps ub - cutoff within epsilon after rounding
        let cutoff = ub - opts.epsilon * (1.0 - 1e-6);
        let milp = MilpOptions { cutoff, abs_gap, ..opts.milp };
        let exact_gap;
        let (mp_bound, p_hat, alpha, mp_slack) = match master.solve(&milp) {
            MasterOutcome::Optimal { objective, bound, p, alpha } => {
                exact_gap = opts.milp.abs_gap.max(opts.milp.rel_gap * objective.abs());
                (bound, p, alpha, objective - bound)
            }
            MasterOutcome::Infeasible => {
                status = SolveStatus::Infeasible;
                lb = f64::INFINITY;
                break;
            }
            MasterOutcome::AboveCutoff => {
                lb = lb.max(cutoff);
                status = SolveStatus::Optimal;
                trace.rows.push(TraceRow {
                    t,
                    lb,
                    ub,
                    n_feas_cuts: 0,
                    n_opt_cuts: 0,
                    n_filtered: 0,
                    millis: start.elapsed().as_secs_f64() * 1e3,
                    mp_rows: master.cut_rows(),
                    lifted: None,
                });
                break;
            }
            MasterOutcome::Failed(m) => return Err(CoreError::Lp(ducap_lp::LpError::Numerical(m))),
        };
        lb = lb.max(mp_bound);
        let p_hat: Vec<f64> = p_hat.iter().map(|v| ((v / P_GRID).round() * P_GRID).clamp(0.0, kappa)).collect();

        let lifted: Vec<bool> = (0..n_s).map(|s| master.is_lifted(s)).collect();
        let results = map_subs(&mut subs, opts.parallel_sp, |sp| {
            if lifted[sp.scenario] {
                return (SpResult::Quiet, true);
            }
            sp.set_capacity(&p_hat);
            match sp.solve_lp() {
                LpOutcome::Optimal { value, duals } => {
                    let a = alpha[sp.scenario];
                    if value > a + 1e-9 * value.abs().max(1.0) {
                        match sp.optimality_cut(&duals, value, t) {
                            Ok(c) => (SpResult::Cut(c), true),
                            Err(e) => (SpResult::Error(format!("scenario {}: {e:?}", sp.scenario)), true),
                        }
                    } else {
                        (SpResult::Quiet, true)
                    }
                }
                LpOutcome::Infeasible { ray } => match sp.feasibility_cut(&ray, t) {
                    Ok(c) => (SpResult::Cut(c), false),
                    Err(e) => (SpResult::Error(format!("scenario {}: {e:?}", sp.scenario)), false),
                },
                LpOutcome::Failed(m) => (SpResult::Error(format!("scenario {}: {m}", sp.scenario)), false),
            }
        });
        let all_lp_feasible = results.iter().all(|r| r.1);
        let mut feas = Vec::new();
        let mut opt = Vec::new();
        for (r, _) in results {
            match r {
                SpResult::Cut(c) if c.kind == CutKind::Feasibility => feas.push(c),
                SpResult::Cut(c) => opt.push(c),
                SpResult::Quiet => {}
                SpResult::Error(m) => return Err(CoreError::Lp(ducap_lp::LpError::Numerical(m))),
            }
        }
        let n_cand = feas.len();
        if let (Some(cfg), Some(rel)) = (&opts.filter, &relation) {
            let out = filter_cuts(feas, &pool, rel, cfg, kappa);
            for (c, r) in out.filtered {
                let retainer = match r {
                    Retainer::Candidate(j) => out.retained[j].clone(),
                    Retainer::Pool(q) => pool[q].clone(),
                };
                filtered.push(FilteredPair { filtered: c, retainer });
            }
            feas = out.retained;
        }
        let n_filtered = n_cand - feas.len();
        let (n_feas, n_opt) = (feas.len(), opt.len());
        let mut added: Vec<BendersCut> = feas;
        added.extend(opt);
        added.sort_by_key(|c| c.scenario);
        master.add_cuts(&added);
        for c in &added {
            spawning_points.push((c.kind == CutKind::Feasibility).then(|| p_hat.clone()));
        }
        pool.extend(added);

        // integer recourse at p_hat gives a feasible plan when every scenario admits one
        let mut milp_infeasible = Vec::new();
        let mut recourse = vec![f64::NAN; n_s];
        if all_lp_feasible {
            let sols = map_subs(&mut subs, opts.parallel_sp, |sp| {
                sp.set_capacity(&p_hat);
                sp.solve_milp(&opts.milp)
            });
            let mut values = Vec::with_capacity(n_s);
            for (s, sol) in sols.into_iter().enumerate() {
                match (sol.status, sol.x) {
                    (MilpStatus::Optimal, Some(x)) => {
                        recourse[s] = sol.objective;
                        values.push(x);
                    }
                    (MilpStatus::Infeasible, _) => milp_infeasible.push(s),
                    (st, _) => {
                        return Err(CoreError::Lp(ducap_lp::LpError::Numerical(format!(
                            "scenario {s} recourse ended with {st:?}"
                        ))))
                    }
                }
            }
            if milp_infeasible.is_empty() {
                let cap = inst.params.gamma / n_du as f64 * p_hat.iter().sum::<f64>();
                let cand = cap + recourse.iter().sum::<f64>() / n_s as f64;
                if cand < ub {
                    ub = cand;
                    best = Some((p_hat.clone(), values));
                }
            }
        }

        let mut row = TraceRow {
            t,
            lb,
            ub,
            n_feas_cuts: n_feas,
            n_opt_cuts: n_opt,
            n_filtered,
            millis: start.elapsed().as_secs_f64() * 1e3,
            mp_rows: master.cut_rows(),
            lifted: None,
        };
        if ub - lb <= opts.epsilon {
            status = SolveStatus::Optimal;
            trace.rows.push(row);
            break;
        }
        if n_feas + n_opt == 0 {
            // (scenario, integrality gap it adds to the objective)
            let candidate = if !opts.lifting {
                None
            } else if let Some(&s) = milp_infeasible.iter().find(|&&s| !master.is_lifted(s)) {
                Some((s, f64::INFINITY))
            } else {
                (0..n_s)
                    .filter(|&s| !master.is_lifted(s) && recourse[s].is_finite())
                    .map(|s| (s, (recourse[s] - alpha[s]) / n_s as f64))
                    .filter(|&(_, gap)| gap > 0.0)
                    .fold(None, |acc: Option<(usize, f64)>, (s, g)| match acc {
                        Some((_, bg)) if bg >= g => acc,
                        _ => Some((s, g)),
                    })
            };
            match candidate {
                // a loose master may explain the stall by itself; close it before lifting
                _ if mp_slack > exact_gap && candidate.is_none_or(|(_, g)| g <= mp_slack) => exact_master = true,
                Some((s, _)) => {
                    master.lift(inst, s, opts.formulation);
                    row.lifted = Some(s);
                }
                None => {
                    trace.rows.push(row);
                    break;
                }
            }
        }
        trace.rows.push(row);
    }

    let solution = best.map(|(p, values)| {
        let blocks: Vec<_> = subs.iter().map(|sp| sp.block.clone()).collect();
        extract_plan(inst, p, &blocks, &values)
    });
    if status != SolveStatus::Infeasible && solution.is_none() && lb.is_infinite() {
        status = SolveStatus::GapOpen;
    }
    Ok(BendersResult {
        status,
        solution,
        lb,
        ub,
        iterations,
        trace,
        pool,
        spawning_points,
        filtered,
        lifted: master.lifted(),
        wall_millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extensive::{solve_extensive, ExtensiveOptions};
    use crate::matrix::Matrix;
    use crate::model::{ProblemParams, Scenario, Topology};
    use crate::studio::{generate_instance, GeneratorConfig};
    use ducap_lp::{dual_objective, farkas_margin, solve_lp, LpStatus};

    fn small(seed: u64, users: usize, scen: usize) -> ProblemInstance {
        generate_instance(&GeneratorConfig { seed, users, n_scenarios: scen, ..Default::default() }).unwrap()
    }

    #[test]
    fn empty_master_is_zero() {
        let inst = small(1, 3, 2);
        let sol = solve_lp(&build_master(&inst, &[])).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn master_with_single_cuts() {
        let mut inst = small(1, 3, 1);
        let n = inst.topology.n_du;
        let opt = BendersCut {
            kind: CutKind::Optimality,
            scenario: 0,
            iteration: 1,
            constant: 5.0,
            coeffs: vec![0.0; n],
            weights: DualWeights::default(),
        };
        assert!((solve_lp(&build_master(&inst, &[opt])).unwrap().objective - 5.0).abs() < 1e-9);
        inst.topology = Topology::standard(2, |_, _| 1.0);
        let mut coeffs = vec![0.0; 4];
        coeffs[0] = -1.0;
        let feas = BendersCut {
            kind: CutKind::Feasibility,
            scenario: 0,
            iteration: 1,
            constant: 120.0,
            coeffs,
            weights: DualWeights::default(),
        };
        assert!((solve_lp(&build_master(&inst, &[feas])).unwrap().objective - 0.01 * 120.0 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn subproblem_at_zero_capacity_is_infeasible_and_at_kappa_feasible() {
        let inst = small(2, 4, 2);
        for s in 0..2 {
            let (m, _) = build_subproblem(&inst, s, &[0.0; 4], Formulation::Tightened);
            assert_eq!(solve_lp(&ducap_lp::relax(&m)).unwrap().status, LpStatus::Infeasible);
            let (m, _) = build_subproblem(&inst, s, &[4096.0; 4], Formulation::Tightened);
            assert_eq!(solve_lp(&ducap_lp::relax(&m)).unwrap().status, LpStatus::Optimal);
        }
    }

    #[test]
    fn cuts_agree_with_the_lp_crate_dual_routes() {
        let inst = small(5, 6, 3);
        let mut sp = Subproblem::new(&inst, 1, &[4096.0; 4], Formulation::Tightened);
        for p in [vec![4096.0; 4], vec![60.0, 10.0, 200.0, 0.0], vec![0.0; 4]] {
            sp.set_capacity(&p);
            match sp.solve_lp() {
                LpOutcome::Optimal { value, duals } => {
                    let cut = sp.optimality_cut(&duals, value, 1).unwrap();
                    let other = dual_objective(&ducap_lp::relax(&sp.model), &duals);
                    assert!((cut.lhs(&p) - other).abs() < 1e-7, "{} vs {other}", cut.lhs(&p));
                    let cold = solve_lp(&ducap_lp::relax(&sp.model)).unwrap();
                    assert!((cold.objective - value).abs() < 1e-7);
                }
                LpOutcome::Infeasible { ray } => {
                    let cut = sp.feasibility_cut(&ray, 1).unwrap();
                    let other = farkas_margin(&ducap_lp::relax(&sp.model), &ray);
                    assert!((cut.lhs(&p) - other).abs() < 1e-7);
                    assert!(cut.lhs(&p) > 0.0);
                }
                LpOutcome::Failed(m) => panic!("{m}"),
            }
        }
    }

    #[test]
    fn optimality_cut_never_rises_with_more_capacity() {
        let inst = small(8, 6, 2);
        let mut sp = Subproblem::new(&inst, 0, &[300.0; 4], Formulation::Tightened);
        let LpOutcome::Optimal { value, duals } = sp.solve_lp() else { panic!() };
        let cut = sp.optimality_cut(&duals, value, 1).unwrap();
        assert!(cut.coeffs.iter().all(|&g| g <= 0.0));
        assert!(cut.lhs(&[400.0, 300.0, 1000.0, 300.0]) <= cut.lhs(&[300.0; 4]) + 1e-12);
    }

    /// One user on one RU eligible for one DU, uRLLC: needs 120 on that DU.
    fn single_urllc() -> ProblemInstance {
        let mut topo = Topology::standard(1, |_, _| 1.0);
        topo.n_ru = 2;
        topo.zeta = Matrix::from_fn(2, 2, |r, u| u8::from(r == u));
        topo.dist_ru = Matrix::from_fn(2, 2, |r, u| if r == u { 1.0 } else { 0.0 });
        let sc = Scenario {
            id: 0,
            coverage: Matrix::from_rows(vec![vec![1, 0]]).unwrap(),
            delay_budget: vec![10.0],
            traffic: vec![20.0],
        };
        ProblemInstance { params: ProblemParams::default(), topology: topo, users: 1, scenarios: vec![sc] }
    }

    #[test]
    fn feasibility_cut_recovers_minimal_capacity() {
        let inst = single_urllc();
        let mut sp = Subproblem::new(&inst, 0, &[0.0, 0.0], Formulation::Tightened);
        let LpOutcome::Infeasible { ray } = sp.solve_lp() else { panic!() };
        let cut = sp.feasibility_cut(&ray, 1).unwrap();
        // bisection on p_0 for the smallest feasible capacity
        let (mut lo, mut hi) = (0.0, 4096.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            sp.set_capacity(&[mid, 0.0]);
            if matches!(sp.solve_lp(), LpOutcome::Optimal { .. }) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // with the central split ruled out by the budget the relaxation needs the full 20 * 6
        let boundary = -cut.constant / cut.coeffs[0];
        assert!(cut.coeffs[0] < 0.0 && (boundary - 120.0).abs() < 1e-9, "{boundary}");
        // the LP accepts bound violations up to 1e-7 relative
        assert!((boundary - hi).abs() < 1e-6 * boundary, "{boundary} vs {hi}");
        let res = run_benders(&inst, &BendersOptions::default()).unwrap();
        assert!((res.solution.unwrap().p[0] - 120.0).abs() < 1e-6);
    }

    #[test]
    fn zero_traffic_terminates_quickly() {
        let mut inst = small(3, 4, 1);
        inst.scenarios[0].traffic.iter_mut().for_each(|w| *w = 0.0);
        let res = run_benders(&inst, &BendersOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!(res.iterations <= 2);
        let ext = solve_extensive(&inst, &ExtensiveOptions::default()).unwrap();
        assert!((res.solution.unwrap().objective() - ext.model_objective).abs() < 1e-6);
    }

    #[test]
    fn matches_extensive_form_on_small_instances() {
        for seed in 0..8 {
            let inst = small(seed, 6, 3);
            let ext = solve_extensive(&inst, &ExtensiveOptions::default()).unwrap();
            for opts in [BendersOptions::default(), BendersOptions::abd()] {
                let res = run_benders(&inst, &opts).unwrap();
                assert_eq!(res.status, SolveStatus::Optimal);
                assert!(res.trace.is_monotone());
                let obj = res.solution.as_ref().unwrap().objective();
                assert!((obj - ext.model_objective).abs() < 1e-6, "seed {seed}: {obj} vs {}", ext.model_objective);
                let p = &res.solution.as_ref().unwrap().p;
                for c in res.pool.iter().filter(|c| c.kind == CutKind::Feasibility) {
                    assert!(c.lhs(p) <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn loose_master_reaches_the_same_optimum() {
        for seed in 0..5 {
            let inst = small(seed, 8, 4);
            let ext = solve_extensive(&inst, &ExtensiveOptions::default()).unwrap();
            let res = run_benders(&inst, &BendersOptions { master_gap: 0.2, ..BendersOptions::abd() }).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(res.trace.is_monotone(), "seed {seed}");
            assert!(res.gap() <= 1e-6, "seed {seed}: gap {:e}", res.gap());
            let obj = res.solution.unwrap().objective();
            assert!((obj - ext.model_objective).abs() < 1e-6, "seed {seed}: {obj} vs {}", ext.model_objective);
        }
    }

    #[test]
    fn identical_scenarios_share_one_lifted_block() {
        for seed in 0..6 {
            let mut inst = small(seed, 8, 2);
            let (a, b) = (inst.scenarios[0].clone(), inst.scenarios[1].clone());
            inst.scenarios = vec![a.clone(), b, a.clone(), a];
            for (k, sc) in inst.scenarios.iter_mut().enumerate() {
                sc.id = k;
            }
            let ext = solve_extensive(&inst, &ExtensiveOptions::default()).unwrap();
            let res = run_benders(&inst, &BendersOptions::default()).unwrap();
            let obj = res.solution.unwrap().objective();
            assert!((obj - ext.model_objective).abs() < 1e-6, "seed {seed}: {obj} vs {}", ext.model_objective);
            let twins = [0, 2, 3].map(|s| res.lifted.contains(&s));
            assert!(twins.iter().all(|&l| l == twins[0]), "seed {seed}: {:?}", res.lifted);
        }
    }

    #[test]
    fn parallel_subproblems_give_identical_runs() {
        let inst = small(4, 6, 4);
        let a = run_benders(&inst, &BendersOptions::default()).unwrap();
        let b = run_benders(&inst, &BendersOptions { parallel_sp: true, ..Default::default() }).unwrap();
        assert_eq!(a.ub.to_bits(), b.ub.to_bits());
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.pool, b.pool);
    }

    #[test]
    fn without_lifting_a_stall_is_reported_as_gap_open() {
        let mut seen_open = false;
        for seed in 0..10 {
            let inst = small(seed, 8, 3);
            let res = run_benders(&inst, &BendersOptions { lifting: false, ..Default::default() }).unwrap();
            assert!(res.trace.is_monotone());
            match res.status {
                SolveStatus::Optimal => assert!(res.gap() <= 1e-6),
                SolveStatus::GapOpen => {
                    seen_open = true;
                    assert!(res.gap() > 1e-6);
                }
                SolveStatus::Infeasible => panic!("generated instances are feasible"),
            }
        }
        let _ = seen_open;
    }
}
