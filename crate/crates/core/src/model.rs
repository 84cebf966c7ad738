//! Problem data: system parameters, the CU/DU/RU hierarchy, demand scenarios
//! and plan solutions.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// DU compute per Mb/s for the always-local functions.
    pub f_a: f64,
    /// Compute per Mb/s for the functions that move with the split.
    pub f_b: f64,
    /// CU compute per Mb/s for the always-central functions.
    pub f_c: f64,
    /// Upper limit on any DU's provisioned capacity.
    pub kappa: f64,
    /// Capacity of each CU.
    pub sigma: f64,
    /// Processing latency (ms) when the split keeps the mid-stack at the DU.
    pub d_split_edge: f64,
    /// Processing latency (ms) when the mid-stack runs at the CU.
    pub d_split_central: f64,
    /// Fronthaul propagation delay in ms per km.
    pub delta: f64,
    /// Weight of provisioned capacity against mean latency.
    pub gamma: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            f_a: 2.0,
            f_b: 4.0,
            f_c: 1.0,
            kappa: 4096.0,
            sigma: 32768.0,
            d_split_edge: 0.25,
            d_split_central: 30.0,
            delta: 0.01,
            gamma: 0.01,
        }
    }
}

/// Three-tier hierarchy. Every DU hangs off one CU (`eta`) and every RU may be
/// served by the DUs marked in `zeta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub n_cu: usize,
    pub n_du: usize,
    pub n_ru: usize,
    /// `zeta[(r, u)] = 1` when DU `u` may host RU `r`.
    pub zeta: Matrix<u8>,
    /// `eta[(u, v)] = 1` when DU `u` belongs to CU `v`.
    pub eta: Matrix<u8>,
    /// Fronthaul length in km for each RU/DU pair; 0 where ineligible.
    pub dist_ru: Matrix<f64>,
}

impl Topology {
    /// Two DUs per CU and two RUs per DU. An RU may use its own DU or that
    /// DU's sibling under the same CU.
    pub fn standard(n_cu: usize, mut dist: impl FnMut(usize, usize) -> f64) -> Topology {
        let n_du = 2 * n_cu;
        let n_ru = 2 * n_du;
        let zeta = Matrix::from_fn(n_ru, n_du, |r, u| u8::from(u == r / 2 || u == (r / 2) ^ 1));
        let eta = Matrix::from_fn(n_du, n_cu, |u, v| u8::from(u / 2 == v));
        let mut dist_ru = Matrix::filled(n_ru, n_du, 0.0);
        for r in 0..n_ru {
            for u in 0..n_du {
                if zeta[(r, u)] == 1 {
                    dist_ru[(r, u)] = dist(r, u);
                }
            }
        }
        Topology { n_cu, n_du, n_ru, zeta, eta, dist_ru }
    }

    pub fn eligible(&self, r: usize, u: usize) -> bool {
        self.zeta[(r, u)] == 1
    }

    /// CU that DU `u` belongs to, if exactly one.
    pub fn cu_of(&self, u: usize) -> Option<usize> {
        let mut it = (0..self.n_cu).filter(|&v| self.eta[(u, v)] == 1);
        match (it.next(), it.next()) {
            (Some(v), None) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    /// `phi[(i, r)] = 1` when user `i` is inside RU `r`'s coverage.
    #[serde(rename = "phi")]
    pub coverage: Matrix<u8>,
    /// Per-user latency budget in ms.
    #[serde(rename = "pi")]
    pub delay_budget: Vec<f64>,
    /// Per-user traffic in Mb/s.
    #[serde(rename = "omega")]
    pub traffic: Vec<f64>,
}

impl Scenario {
    pub fn covered(&self, i: usize, r: usize) -> bool {
        self.coverage[(i, r)] == 1
    }

    pub fn truncate_users(&self, users: usize) -> Scenario {
        Scenario {
            id: self.id,
            coverage: self.coverage.truncate_rows(users),
            delay_budget: self.delay_budget[..users].to_vec(),
            traffic: self.traffic[..users].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub params: ProblemParams,
    pub topology: Topology,
    pub users: usize,
    pub scenarios: Vec<Scenario>,
}

impl ProblemInstance {
    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Same instance restricted to the first `users` users of every scenario.
    pub fn with_user_prefix(&self, users: usize) -> ProblemInstance {
        let users = users.min(self.users);
        ProblemInstance {
            params: self.params.clone(),
            topology: self.topology.clone(),
            users,
            scenarios: self.scenarios.iter().map(|s| s.truncate_users(users)).collect(),
        }
    }

    /// Same instance restricted to the listed scenarios, renumbered from 0.
    pub fn with_scenarios(&self, keep: &[usize]) -> ProblemInstance {
        let scenarios = keep
            .iter()
            .enumerate()
            .map(|(k, &s)| Scenario { id: k, ..self.scenarios[s].clone() })
            .collect();
        ProblemInstance { scenarios, ..self.clone() }
    }
}

/// Binary placement decisions of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `lambda[(i, r)]`: user `i` attaches to RU `r`.
    pub lambda: Matrix<u8>,
    /// `theta[(r, u)]`: RU `r` is hosted by DU `u`.
    pub theta: Matrix<u8>,
    /// `psi[(r, u)]`: the mid-stack of RU `r` on DU `u` runs at the CU.
    pub psi: Matrix<u8>,
}

impl Assignment {
    pub fn empty(users: usize, n_ru: usize, n_du: usize) -> Assignment {
        Assignment {
            lambda: Matrix::filled(users, n_ru, 0),
            theta: Matrix::filled(n_ru, n_du, 0),
            psi: Matrix::filled(n_ru, n_du, 0),
        }
    }

    /// The single (RU, DU) pair serving user `i`, if the assignment is proper.
    pub fn serving_pair(&self, i: usize) -> Option<(usize, usize)> {
        let r = (0..self.lambda.cols()).find(|&r| self.lambda[(i, r)] == 1)?;
        let u = (0..self.theta.cols()).find(|&u| self.theta[(r, u)] == 1)?;
        Some((r, u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub capacity_term: f64,
    pub latency_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    /// Provisioned capacity per DU.
    pub p: Vec<f64>,
    pub assignments: Vec<Assignment>,
    /// `latencies[(s, i)]` in ms.
    pub latencies: Matrix<f64>,
    pub cost: CostBreakdown,
}

impl PlanSolution {
    pub fn objective(&self) -> f64 {
        self.cost.total
    }
}
