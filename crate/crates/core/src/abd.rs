//! Redundant feasibility cut removal through scenario dominance.

use serde::{Deserialize, Serialize};

use crate::benders::{BendersCut, CutKind};
use crate::formulation::RowFamily;
use crate::model::Scenario;

/// `dominated(s1, s2)` holds when `s1` has no more coverage and no looser
/// delay budgets than `s2` anywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceRelation {
    n: usize,
    flags: Vec<bool>,
}

impl DominanceRelation {
    pub fn compute(scenarios: &[Scenario]) -> DominanceRelation {
        let n = scenarios.len();
        let mut flags = vec![false; n * n];
        for (a, s1) in scenarios.iter().enumerate() {
            for (b, s2) in scenarios.iter().enumerate() {
                flags[a * n + b] = a == b || dominates(s2, s1);
            }
        }
        DominanceRelation { n, flags }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dominated(&self, s1: usize, s2: usize) -> bool {
        self.flags[s1 * self.n + s2]
    }
}

fn dominates(s2: &Scenario, s1: &Scenario) -> bool {
    s1.coverage.as_slice().iter().zip(s2.coverage.as_slice()).all(|(a, b)| a <= b)
        && s1.delay_budget.iter().zip(&s2.delay_budget).all(|(a, b)| a <= b)
}

pub fn precompute_dominance(scenarios: &[Scenario]) -> DominanceRelation {
    DominanceRelation::compute(scenarios)
}

/// Extra condition a dominating scenario's cut must meet before it may stand in for another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterGuard {
    /// The retaining cut must imply the dropped one on the whole capacity box.
    #[default]
    Implication,
    /// As `Implication`, and the retaining cut's coverage and delay weights
    /// must be non-negative.
    DualWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub guard: FilterGuard,
    /// Also let feasibility cuts already in the master stand in for new ones.
    pub cross_iteration: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { guard: FilterGuard::Implication, cross_iteration: false }
    }
}

const SIGN_TOL: f64 = 1e-9;

/// Whether `retainer <= 0` implies `cut <= 0` for every `p` in `[0, kappa]^U`.
///
/// By LP duality the largest value of `cut` over the retainer's region equals
/// `min_{mu >= 0} a_c - mu a_r + sum_u kappa max(0, g_c,u - mu g_r,u)`, a convex
/// piecewise-linear function whose minimum sits at `mu = 0` or a breakpoint.
pub fn implies(retainer: &BendersCut, cut: &BendersCut, kappa: f64) -> bool {
    let (ar, gr) = (retainer.constant, &retainer.coeffs);
    let (ac, gc) = (cut.constant, &cut.coeffs);
    let tol = 1e-12 * ac.abs().max(1.0);
    let min_r = ar + gr.iter().map(|g| kappa * g.min(0.0)).sum::<f64>();
    if min_r > 0.0 {
        return true;
    }
    let bound = |mu: f64| ac - mu * ar + gr.iter().zip(gc).map(|(r, c)| kappa * (c - mu * r).max(0.0)).sum::<f64>();
    let mut best = bound(0.0);
    for (r, c) in gr.iter().zip(gc) {
        if *r != 0.0 {
            let mu = c / r;
            if mu > 0.0 {
                best = best.min(bound(mu));
            }
        }
    }
    best <= tol
}

fn guard_holds(cfg: &FilterConfig, retainer: &BendersCut, cut: &BendersCut, kappa: f64) -> bool {
    if cfg.guard == FilterGuard::DualWeights {
        let w = &retainer.weights;
        if w.min_weight(RowFamily::Coverage) < -SIGN_TOL || w.min_weight(RowFamily::Delay) < -SIGN_TOL {
            return false;
        }
    }
    implies(retainer, cut, kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retainer {
    /// Index into the retained candidates.
    Candidate(usize),
    /// Index into the supplied pool.
    Pool(usize),
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub retained: Vec<BendersCut>,
    /// Each dropped cut with the cut that now stands in for it.
    pub filtered: Vec<(BendersCut, Retainer)>,
}

/// Drop feasibility cuts implied by a cut from a dominating scenario. Candidates
/// are scanned in ascending scenario order; a cut can only be dropped in favour
/// of one that is still kept, so the last candidate standing is never dropped.
/// Optimality cuts pass through untouched.
pub fn filter_cuts(
    candidates: Vec<BendersCut>,
    pool: &[BendersCut],
    relation: &DominanceRelation,
    cfg: &FilterConfig,
    kappa: f64,
) -> FilterOutcome {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&k| candidates[k].scenario);
    let n = candidates.len();
    // by[k] = Some(j) when candidate k is dropped in favour of j
    let mut by: Vec<Option<Retainer>> = vec![None; n];
    let feas = |c: &BendersCut| c.kind == CutKind::Feasibility;
    for &k in &order {
        let c = &candidates[k];
        if !feas(c) {
            continue;
        }
        let found = order.iter().copied().find(|&j| {
            j != k
                && by[j].is_none()
                && feas(&candidates[j])
                && relation.dominated(c.scenario, candidates[j].scenario)
                && guard_holds(cfg, &candidates[j], c, kappa)
        });
        if let Some(j) = found {
            by[k] = Some(Retainer::Candidate(j));
            continue;
        }
        if cfg.cross_iteration {
            let found = pool.iter().position(|q| {
                feas(q) && relation.dominated(c.scenario, q.scenario) && guard_holds(cfg, q, c, kappa)
            });
            if let Some(q) = found {
                by[k] = Some(Retainer::Pool(q));
            }
        }
    }
    // follow chains to a kept cut, then renumber into the retained list
    let resolve = |mut r: Retainer| loop {
        match r {
            Retainer::Candidate(j) => match by[j] {
                Some(next) => r = next,
                None => return r,
            },
            Retainer::Pool(_) => return r,
        }
    };
    let mut new_index = vec![usize::MAX; n];
    let mut retained = Vec::new();
    for (k, c) in candidates.iter().enumerate() {
        if by[k].is_none() {
            new_index[k] = retained.len();
            retained.push(c.clone());
        }
    }
    let mut filtered = Vec::new();
    for (k, c) in candidates.into_iter().enumerate() {
        if let Some(r) = by[k] {
            let r = match resolve(r) {
                Retainer::Candidate(j) => Retainer::Candidate(new_index[j]),
                p => p,
            };
            filtered.push((c, r));
        }
    }
    FilterOutcome { retained, filtered }
}
