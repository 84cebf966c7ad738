//! Best-bound branch-and-bound over binary variables with warm-started dual
//! simplex, plunging into the nearer child after each branching.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::LpError;
use crate::model::LinearModel;
use crate::simplex::{Basis, LpStatus, Simplex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub node_limit: usize,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub int_tol: f64,
    /// Nodes whose bound reaches this value are pruned; `Infeasible` then
    /// means no solution below it.
    pub cutoff: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 200_000,
            abs_gap: 1e-9,
            rel_gap: 1e-9,
            int_tol: 1e-6,
            cutoff: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node budget exhausted or a node LP failed; `x` holds the incumbent if any.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: f64,
    pub x: Option<Vec<f64>>,
    pub best_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MilpSolution {
    pub fn gap(&self) -> f64 {
        if self.x.is_none() {
            return f64::INFINITY;
        }
        (self.objective - self.best_bound).max(0.0)
    }
}

struct Node {
    bound: f64,
    seq: usize,
    parent: usize,
    fixes: Vec<(usize, f64, f64)>,
    basis: Basis,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then earliest creation, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn solve_milp(model: &LinearModel, opts: &MilpOptions) -> Result<MilpSolution, LpError> {
    model.validate()?;
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let priority: Vec<u8> = binaries.iter().map(|&j| model.vars[j].priority).collect();
    let mut s = Simplex::new(model);
    Ok(branch_and_bound_ranked(&mut s, &binaries, &priority, opts))
}

/// Branch and bound starting from the current state of `s`. Bounds of the
/// listed columns are restored on return and the root basis is reinstalled.
pub fn branch_and_bound(s: &mut Simplex, binaries: &[usize], opts: &MilpOptions) -> MilpSolution {
    branch_and_bound_ranked(s, binaries, &[], opts)
}

/// As [`branch_and_bound`], branching on the lowest `priority` rank that has a
/// fractional binary, most fractional first. An empty `priority` ranks all equally.
pub fn branch_and_bound_ranked(
    s: &mut Simplex,
    binaries: &[usize],
    priority: &[u8],
    opts: &MilpOptions,
) -> MilpSolution {
    assert!(priority.is_empty() || priority.len() == binaries.len());
    let rank = |k: usize| priority.get(k).copied().unwrap_or(0);
    let start_iters = s.iterations();
    let original: Vec<(usize, f64, f64)> = binaries
        .iter()
        .map(|&j| {
            let (l, u) = s.col_bounds(j);
            (j, l, u)
        })
        .collect();
    let mut root_status = s.solve();
    if root_status == LpStatus::IterationLimit {
        s.reset_to_slack_basis();
        root_status = s.solve();
    }
    let root_basis = s.basis();
    let mut out = MilpSolution {
        status: MilpStatus::Infeasible,
        objective: f64::INFINITY,
        x: None,
        best_bound: f64::INFINITY,
        nodes: 1,
        lp_iterations: 0,
    };
    match root_status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            out.lp_iterations = s.iterations() - start_iters;
            return out;
        }
        LpStatus::Unbounded => {
            out.status = MilpStatus::Unbounded;
            out.objective = f64::NEG_INFINITY;
            out.best_bound = f64::NEG_INFINITY;
            out.lp_iterations = s.iterations() - start_iters;
            return out;
        }
        LpStatus::IterationLimit => {
            out.status = MilpStatus::NodeLimit;
            out.best_bound = f64::NEG_INFINITY;
            out.lp_iterations = s.iterations() - start_iters;
            return out;
        }
    }

    let prune_tol = |inc: f64| opts.abs_gap.max(opts.rel_gap * inc.abs());
    let threshold = |inc: &Option<(f64, Vec<f64>)>| match inc {
        Some((v, _)) => (v - prune_tol(*v)).min(opts.cutoff),
        None => opts.cutoff,
    };
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut trouble = false;
    let mut last_solved = 0usize;
    let mut current_fixes: Vec<(usize, f64, f64)> = Vec::new();
    // child of the last solved node, taken before the heap to reuse its basis
    let mut dive: Option<Node> = None;
    // lowest bound among nodes dropped within the gap tolerance
    let mut pruned = f64::INFINITY;

    // The root is node 0 and is already solved.
    let mut pending: Option<(usize, Vec<(usize, f64, f64)>)> = Some((0, Vec::new()));
    loop {
        let (node_seq, fixes) = match pending.take() {
            Some(p) => p,
            None => {
                let Some(node) = dive.take().or_else(|| heap.pop()) else {
                    break;
                };
                let limit = threshold(&incumbent);
                if node.bound >= limit {
                    pruned = pruned.min(node.bound);
                    if heap.peek().is_some_and(|n| n.bound < limit) {
                        // a pruned dive; the heap still holds open nodes
                        continue;
                    }
                    pruned = pruned.min(heap.peek().map_or(f64::INFINITY, |n| n.bound));
                    heap.clear();
                    break;
                }
                if out.nodes >= opts.node_limit {
                    heap.push(node);
                    trouble = true;
                    break;
                }
                out.nodes += 1;
                for &(j, _, _) in &current_fixes {
                    let orig = original.iter().find(|o| o.0 == j).unwrap();
                    s.set_col_bounds(j, orig.1, orig.2);
                }
                for &(j, l, u) in &node.fixes {
                    s.set_col_bounds(j, l, u);
                }
                if node.parent != last_solved {
                    s.set_basis(&node.basis);
                }
                current_fixes = node.fixes.clone();
                let mut st = s.solve();
                if st == LpStatus::IterationLimit {
                    s.reset_to_slack_basis();
                    st = s.solve();
                }
                last_solved = node.seq;
                match st {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => continue,
                    LpStatus::Unbounded => {
                        out.status = MilpStatus::Unbounded;
                        out.objective = f64::NEG_INFINITY;
                        out.best_bound = f64::NEG_INFINITY;
                        restore(s, &original, &root_basis);
                        out.lp_iterations = s.iterations() - start_iters;
                        return out;
                    }
                    LpStatus::IterationLimit => {
                        trouble = true;
                        continue;
                    }
                }
                (node.seq, node.fixes)
            }
        };
        let obj = s.objective();
        if obj >= threshold(&incumbent) {
            pruned = pruned.min(obj);
            continue;
        }
        let x = s.primal();
        let mut branch_var = None;
        let mut best = (u8::MAX, 0.0);
        for (k, &j) in binaries.iter().enumerate() {
            let f = (x[j] - x[j].round()).abs();
            if f <= opts.int_tol {
                continue;
            }
            let r = rank(k);
            if r < best.0 || (r == best.0 && f > best.1 + 1e-12) {
                best = (r, f);
                branch_var = Some(j);
            }
        }
        match branch_var {
            None => {
                let mut xi = x.to_vec();
                for &j in binaries {
                    xi[j] = xi[j].round();
                }
                incumbent = Some((obj, xi));
            }
            Some(j) => {
                let basis = s.basis();
                let near = x[j].round();
                for (l, u) in [(0.0f64, 0.0f64), (1.0, 1.0)] {
                    let orig = original.iter().find(|o| o.0 == j).unwrap();
                    let (l, u) = (l.max(orig.1), u.min(orig.2));
                    if l > u {
                        continue;
                    }
                    seq += 1;
                    let mut f = fixes.clone();
                    f.retain(|e| e.0 != j);
                    f.push((j, l, u));
                    let child = Node {
                        bound: obj,
                        seq,
                        parent: node_seq,
                        fixes: f,
                        basis: basis.clone(),
                    };
                    if l == near {
                        dive = Some(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((obj, x)) => {
            out.objective = obj;
            out.best_bound = if trouble { open_bound } else { f64::INFINITY }.min(pruned).min(obj);
            out.x = Some(x);
            out.status = if trouble {
                MilpStatus::NodeLimit
            } else {
                MilpStatus::Optimal
            };
        }
        None => {
            out.status = if trouble {
                MilpStatus::NodeLimit
            } else {
                MilpStatus::Infeasible
            };
            out.best_bound = if trouble { open_bound } else { f64::INFINITY }.min(pruned);
        }
    }
    restore(s, &original, &root_basis);
    out.lp_iterations = s.iterations() - start_iters;
    out
}

fn restore(s: &mut Simplex, original: &[(usize, f64, f64)], root_basis: &Basis) {
    for &(j, l, u) in original {
        s.set_col_bounds(j, l, u);
    }
    s.set_basis(root_basis);
}
