//! Direct evaluation of plans: latency, loads, cost and constraint checks.

use serde::Serialize;

use crate::matrix::Matrix;
use crate::model::{Assignment, CostBreakdown, ProblemInstance, ProblemParams};

/// Latency (ms) of serving a user through a fronthaul of `dist_km` with the
/// given split (`central = true` puts the mid-stack at the CU).
pub fn service_latency(params: &ProblemParams, dist_km: f64, central: bool) -> f64 {
    let psi = if central { 1.0 } else { 0.0 };
    params.delta * dist_km + (1.0 - psi) * params.d_split_edge + psi * params.d_split_central
}

/// Compute drawn at the DU by `traffic` Mb/s under the given split.
pub fn du_load_contribution(params: &ProblemParams, traffic: f64, central: bool) -> f64 {
    let psi = if central { 1.0 } else { 0.0 };
    traffic * (params.f_a + (1.0 - psi) * params.f_b)
}

/// Compute drawn at the CU by `traffic` Mb/s under the given split.
pub fn cu_load_contribution(params: &ProblemParams, traffic: f64, central: bool) -> f64 {
    let psi = if central { 1.0 } else { 0.0 };
    traffic * (psi * params.f_b + params.f_c)
}

/// Weighted capacity plus mean latency over all scenario/user pairs.
pub fn total_cost(params: &ProblemParams, p: &[f64], latencies: &Matrix<f64>) -> CostBreakdown {
    let capacity_term = if p.is_empty() { 0.0 } else { params.gamma * p.iter().sum::<f64>() / p.len() as f64 };
    let count = latencies.rows() * latencies.cols();
    let latency_term = if count == 0 { 0.0 } else { latencies.as_slice().iter().sum::<f64>() / count as f64 };
    CostBreakdown { capacity_term, latency_term, total: capacity_term + latency_term }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    CapacityLimit,
    Coverage,
    UserAccess,
    RuPlacement,
    Eligibility,
    DuCapacity,
    CuCapacity,
    Delay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub scenario: Option<usize>,
    /// Indices of the violated row, e.g. `[i, r]` for coverage.
    pub index: Vec<usize>,
    /// Negative slack: how far the row is from being satisfied.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub latencies: Matrix<f64>,
    pub cost: CostBreakdown,
    pub violations: Vec<Violation>,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Latency of every user in one scenario, summed over all selected RU/DU pairs.
pub fn scenario_latencies(inst: &ProblemInstance, a: &Assignment) -> Vec<f64> {
    let topo = &inst.topology;
    (0..inst.users)
        .map(|i| {
            let mut d = 0.0;
            for r in 0..topo.n_ru {
                if a.lambda[(i, r)] == 0 {
                    continue;
                }
                for u in 0..topo.n_du {
                    if a.theta[(r, u)] == 1 {
                        d += service_latency(&inst.params, topo.dist_ru[(r, u)], a.psi[(r, u)] == 1);
                    }
                }
            }
            d
        })
        .collect()
}

/// Check `p` and one assignment per scenario against every constraint of the
/// model and compute the cost. Latencies follow the assignment, not any solver value.
pub fn evaluate_assignment(inst: &ProblemInstance, p: &[f64], assignments: &[Assignment], tol: f64) -> Evaluation {
    let params = &inst.params;
    let topo = &inst.topology;
    let mut v = Vec::new();
    let mut push = |kind, scenario, index: Vec<usize>, slack: f64| {
        if slack < -tol {
            v.push(Violation { kind, scenario, index, slack });
        }
    };
    for (u, &pu) in p.iter().enumerate() {
        push(ConstraintKind::CapacityLimit, None, vec![u], pu.min(params.kappa - pu));
    }
    let mut lat = Matrix::filled(inst.n_scenarios(), inst.users, 0.0);
    for (s, (sc, a)) in inst.scenarios.iter().zip(assignments).enumerate() {
        let sid = Some(s);
        for i in 0..inst.users {
            let mut total = 0.0;
            for r in 0..topo.n_ru {
                let l = a.lambda[(i, r)];
                total += l as f64;
                push(ConstraintKind::Coverage, sid, vec![i, r], sc.coverage[(i, r)] as f64 - l as f64);
            }
            push(ConstraintKind::UserAccess, sid, vec![i], -(total - 1.0).abs());
        }
        for r in 0..topo.n_ru {
            let hosts: f64 = (0..topo.n_du).map(|u| a.theta[(r, u)] as f64).sum();
            push(ConstraintKind::RuPlacement, sid, vec![r], -(hosts - 1.0).abs());
            for u in 0..topo.n_du {
                push(ConstraintKind::Eligibility, sid, vec![r, u], topo.zeta[(r, u)] as f64 - a.theta[(r, u)] as f64);
            }
        }
        let mut du_load = vec![0.0; topo.n_du];
        let mut cu_load = vec![0.0; topo.n_cu];
        for i in 0..inst.users {
            for r in 0..topo.n_ru {
                if a.lambda[(i, r)] == 0 {
                    continue;
                }
                for u in 0..topo.n_du {
                    if a.theta[(r, u)] == 0 {
                        continue;
                    }
                    let central = a.psi[(r, u)] == 1;
                    du_load[u] += du_load_contribution(params, sc.traffic[i], central);
                    for cu in 0..topo.n_cu {
                        if topo.eta[(u, cu)] == 1 {
                            cu_load[cu] += cu_load_contribution(params, sc.traffic[i], central);
                        }
                    }
                }
            }
        }
        for u in 0..topo.n_du {
            let pu = p.get(u).copied().unwrap_or(0.0);
            push(ConstraintKind::DuCapacity, sid, vec![u], pu - du_load[u]);
        }
        for cu in 0..topo.n_cu {
            push(ConstraintKind::CuCapacity, sid, vec![cu], params.sigma - cu_load[cu]);
        }
        let d = scenario_latencies(inst, a);
        for i in 0..inst.users {
            push(ConstraintKind::Delay, sid, vec![i], sc.delay_budget[i] - d[i]);
            lat[(s, i)] = d[i];
        }
    }
    let cost = total_cost(params, p, &lat);
    Evaluation { latencies: lat, cost, violations: v }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

pub const DIST_RANGE_KM: (f64, f64) = (0.5, 4.0);

pub fn validate_instance(inst: &ProblemInstance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let p = &inst.params;
    let t = &inst.topology;
    let named = [
        ("f_a", p.f_a),
        ("f_b", p.f_b),
        ("f_c", p.f_c),
        ("kappa", p.kappa),
        ("sigma", p.sigma),
        ("d_split_edge", p.d_split_edge),
        ("d_split_central", p.d_split_central),
        ("delta", p.delta),
    ];
    for (name, val) in named {
        if !(val.is_finite() && val > 0.0) {
            rep.errors.push(format!("parameter {name} must be positive and finite, got {val}"));
        }
    }
    if !(p.gamma.is_finite() && p.gamma >= 0.0) {
        rep.errors.push(format!("parameter gamma must be non-negative, got {}", p.gamma));
    }
    if t.n_cu == 0 || t.n_du == 0 || t.n_ru == 0 {
        rep.errors.push("topology needs at least one CU, DU and RU".into());
        return rep;
    }
    let shapes = [
        ("zeta", t.zeta.shape(), (t.n_ru, t.n_du)),
        ("eta", t.eta.shape(), (t.n_du, t.n_cu)),
        ("dist_ru", t.dist_ru.shape(), (t.n_ru, t.n_du)),
    ];
    let mut shapes_ok = true;
    for (name, got, want) in shapes {
        if got != want {
            rep.errors.push(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1));
            shapes_ok = false;
        }
    }
    if !shapes_ok {
        return rep;
    }
    if t.zeta.as_slice().iter().chain(t.eta.as_slice()).any(|&b| b > 1) {
        rep.errors.push("zeta and eta must be 0/1".into());
    }
    for r in 0..t.n_ru {
        if (0..t.n_du).all(|u| t.zeta[(r, u)] == 0) {
            rep.errors.push(format!("RU {r} is eligible for no DU"));
        }
        for u in 0..t.n_du {
            if t.zeta[(r, u)] == 1 {
                let d = t.dist_ru[(r, u)];
                if !(d.is_finite() && d > 0.0) {
                    rep.errors.push(format!("distance of RU {r} to DU {u} must be positive, got {d}"));
                } else if d < DIST_RANGE_KM.0 || d > DIST_RANGE_KM.1 {
                    rep.warnings.push(format!("distance of RU {r} to DU {u} is {d} km, outside the usual range"));
                }
            }
        }
    }
    for u in 0..t.n_du {
        if t.cu_of(u).is_none() {
            rep.errors.push(format!("DU {u} must belong to exactly one CU"));
        }
    }
    if inst.users == 0 {
        rep.errors.push("instance has no users".into());
    }
    if inst.scenarios.is_empty() {
        rep.errors.push("instance has no scenarios".into());
    }
    for (k, sc) in inst.scenarios.iter().enumerate() {
        if sc.coverage.shape() != (inst.users, t.n_ru) {
            let (a, b) = sc.coverage.shape();
            rep.errors.push(format!("scenario {k}: phi is {a}x{b}, expected {}x{}", inst.users, t.n_ru));
            continue;
        }
        if sc.delay_budget.len() != inst.users || sc.traffic.len() != inst.users {
            rep.errors.push(format!("scenario {k}: pi and omega need {} entries", inst.users));
            continue;
        }
        if sc.coverage.as_slice().iter().any(|&b| b > 1) {
            rep.errors.push(format!("scenario {k}: phi must be 0/1"));
        }
        for i in 0..inst.users {
            if (0..t.n_ru).all(|r| sc.coverage[(i, r)] == 0) {
                rep.errors.push(format!("scenario {k}: user {i} is covered by no RU"));
            }
            if !(sc.traffic[i].is_finite() && sc.traffic[i] >= 0.0) {
                rep.errors.push(format!("scenario {k}: traffic of user {i} must be non-negative"));
            }
            if !(sc.delay_budget[i].is_finite() && sc.delay_budget[i] > 0.0) {
                rep.errors.push(format!("scenario {k}: delay budget of user {i} must be positive"));
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Scenario, Topology};

    fn params() -> ProblemParams {
        ProblemParams::default()
    }

    #[test]
    fn latency_of_edge_and_central_splits() {
        assert!((service_latency(&params(), 2.0, false) - 0.27).abs() < 1e-12);
        assert!((service_latency(&params(), 2.0, true) - 30.02).abs() < 1e-12);
    }

    #[test]
    fn loads_follow_the_split() {
        let p = params();
        assert_eq!(du_load_contribution(&p, 20.0, false), 120.0);
        assert_eq!(du_load_contribution(&p, 20.0, true), 40.0);
        assert_eq!(cu_load_contribution(&p, 20.0, true), 100.0);
        assert_eq!(cu_load_contribution(&p, 20.0, false), 20.0);
    }

    #[test]
    fn cost_with_two_dus_and_two_users() {
        let p = params();
        let lat = Matrix::from_rows(vec![vec![0.26, 30.02]]).unwrap();
        let c = total_cost(&p, &[100.0, 100.0], &lat);
        assert!((c.capacity_term - 1.0).abs() < 1e-12);
        assert!((c.latency_term - 15.14).abs() < 1e-12);
        assert!((c.total - 16.14).abs() < 1e-12);
    }

    fn tiny_instance() -> ProblemInstance {
        let topology = Topology::standard(1, |_, _| 1.0);
        let coverage = Matrix::from_fn(2, 4, |i, r| u8::from(r == i));
        ProblemInstance {
            params: params(),
            topology,
            users: 2,
            scenarios: vec![Scenario { id: 0, coverage, delay_budget: vec![100.0, 10.0], traffic: vec![20.0, 5.0] }],
        }
    }

    #[test]
    fn rejects_ru_without_eligible_du() {
        let mut inst = tiny_instance();
        for u in 0..2 {
            inst.topology.zeta[(3, u)] = 0;
        }
        let rep = validate_instance(&inst);
        assert!(!rep.is_valid());
        assert!(rep.errors.iter().any(|e| e.contains("RU 3")), "{:?}", rep.errors);
    }

    #[test]
    fn well_formed_instance_passes() {
        assert!(validate_instance(&tiny_instance()).is_valid());
    }

    #[test]
    fn delay_violation_is_reported_with_indices() {
        let inst = tiny_instance();
        let mut a = Assignment::empty(2, 4, 2);
        a.lambda[(0, 0)] = 1;
        a.lambda[(1, 1)] = 1;
        for r in 0..4 {
            a.theta[(r, r / 2)] = 1;
            a.psi[(r, r / 2)] = 1;
        }
        let ev = evaluate_assignment(&inst, &[1000.0, 1000.0], &[a], 1e-6);
        assert_eq!(ev.violations.len(), 1);
        let v = &ev.violations[0];
        assert_eq!(v.kind, ConstraintKind::Delay);
        assert_eq!(v.index, vec![1]);
        assert!((v.slack + 20.01).abs() < 1e-9);
    }
}
