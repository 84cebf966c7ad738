//! Linearised per-scenario constraint block, shared by the extensive form,
//! the Benders subproblems and lifted master scenarios.

use ducap_lp::{ConId, Constraint, LinearModel, Sense, VarId, Variable};
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::model::ProblemInstance;

/// `Paper` is the plain product linearisation. `Tightened` adds, for every
/// covered (user, RU) pair, `sum_u x[i,r,u] = lambda[i,r]`, and fixes to zero
/// the `x` or `y` of pairs whose edge or central latency exceeds the user's
/// budget. Both are valid for all binary points and only cut fractional ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Paper,
    #[default]
    Tightened,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    Coverage,
    UserAccess,
    RuPlacement,
    Eligibility,
    DuCapacity,
    CuCapacity,
    Delay,
    Latency,
    LinXLambda,
    LinXTheta,
    LinXLower,
    LinYX,
    LinYPsi,
    LinYLower,
    Link,
}

impl RowFamily {
    pub const STRUCTURAL: [RowFamily; 8] = [
        RowFamily::Coverage,
        RowFamily::UserAccess,
        RowFamily::RuPlacement,
        RowFamily::Eligibility,
        RowFamily::DuCapacity,
        RowFamily::CuCapacity,
        RowFamily::Delay,
        RowFamily::Latency,
    ];
    pub const LINEARIZATION: [RowFamily; 6] = [
        RowFamily::LinXLambda,
        RowFamily::LinXTheta,
        RowFamily::LinXLower,
        RowFamily::LinYX,
        RowFamily::LinYPsi,
        RowFamily::LinYLower,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RowFamily::Coverage => "coverage",
            RowFamily::UserAccess => "user_access",
            RowFamily::RuPlacement => "ru_placement",
            RowFamily::Eligibility => "eligibility",
            RowFamily::DuCapacity => "du_capacity",
            RowFamily::CuCapacity => "cu_capacity",
            RowFamily::Delay => "delay",
            RowFamily::Latency => "latency",
            RowFamily::LinXLambda => "lin_x_lambda",
            RowFamily::LinXTheta => "lin_x_theta",
            RowFamily::LinXLower => "lin_x_lower",
            RowFamily::LinYX => "lin_y_x",
            RowFamily::LinYPsi => "lin_y_psi",
            RowFamily::LinYLower => "lin_y_lower",
            RowFamily::Link => "link",
        }
    }
}

/// Where the DU capacity rows get their right-hand side.
#[derive(Debug, Clone, Copy)]
pub enum CapacityLink<'a> {
    /// `load_u - p_u <= 0` against model variables.
    Variables(&'a [VarId]),
    /// `load_u <= p_u` with fixed values.
    Fixed(&'a [f64]),
}

/// One product variable pair: `x = lambda[i,r] * theta[r,u]`, `y = x * psi[r,u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkedPair {
    pub i: usize,
    pub r: usize,
    pub u: usize,
    pub x: VarId,
    pub y: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRow {
    pub family: RowFamily,
    /// Family-specific index: user, RU, DU, CU, pair position or `i * n_ru + r`.
    pub index: usize,
    pub con: ConId,
}

#[derive(Debug, Clone)]
pub struct ScenarioBlock {
    pub scenario: usize,
    pub lambda: Matrix<VarId>,
    pub theta: Matrix<VarId>,
    pub psi: Matrix<VarId>,
    pub d: Vec<VarId>,
    pub pairs: Vec<LinkedPair>,
    pub rows: Vec<BlockRow>,
    /// Capacity row of each DU.
    pub capacity_rows: Vec<ConId>,
    pub binaries: Vec<VarId>,
}

impl ScenarioBlock {
    pub fn rows_of(&self, family: RowFamily) -> impl Iterator<Item = &BlockRow> + '_ {
        self.rows.iter().filter(move |r| r.family == family)
    }
}

/// Append scenario `s` to `model`. Latencies enter the objective with weight
/// `latency_weight` each.
pub fn add_scenario_block(
    model: &mut LinearModel,
    inst: &ProblemInstance,
    s: usize,
    cap: CapacityLink<'_>,
    latency_weight: f64,
    form: Formulation,
) -> ScenarioBlock {
    let prm = &inst.params;
    let topo = &inst.topology;
    let sc = &inst.scenarios[s];
    let (ni, nr, nu) = (inst.users, topo.n_ru, topo.n_du);
    let mut binaries = Vec::new();
    // branch on user and RU decisions before their products
    let mut bin = |model: &mut LinearModel, priority: u8, name: String| {
        let v = model.add_var(Variable::binary().with_priority(priority).named(name));
        binaries.push(v);
        v
    };
    let lambda = Matrix::from_fn(ni, nr, |i, r| bin(model, 0, format!("s{s}_lam_{i}_{r}")));
    let theta = Matrix::from_fn(nr, nu, |r, u| bin(model, 1, format!("s{s}_theta_{r}_{u}")));
    let psi = Matrix::from_fn(nr, nu, |r, u| bin(model, 2, format!("s{s}_psi_{r}_{u}")));
    let d: Vec<VarId> = (0..ni)
        .map(|i| {
            model.add_var(
                Variable::continuous(0.0, f64::INFINITY)
                    .with_obj(latency_weight)
                    .named(format!("s{s}_d_{i}")),
            )
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..ni {
        for r in 0..nr {
            if !sc.covered(i, r) {
                continue;
            }
            for u in 0..nu {
                if !topo.eligible(r, u) {
                    continue;
                }
                let x = bin(model, 3, format!("s{s}_x_{i}_{r}_{u}"));
                let y = bin(model, 3, format!("s{s}_y_{i}_{r}_{u}"));
                if form == Formulation::Tightened {
                    // a pair whose latency breaks the budget is never used
                    let edge = prm.delta * topo.dist_ru[(r, u)] + prm.d_split_edge;
                    let central = edge + prm.d_split_central - prm.d_split_edge;
                    if edge > sc.delay_budget[i] {
                        model.var_mut(x).ub = 0.0;
                    }
                    if central > sc.delay_budget[i] {
                        model.var_mut(y).ub = 0.0;
                    }
                }
                pairs.push(LinkedPair { i, r, u, x, y });
            }
        }
    }

    let mut rows = Vec::new();
    let mut add = |model: &mut LinearModel, family: RowFamily, index: usize, c: Constraint| {
        let con = model.add_constraint(c.tagged(family.tag()));
        rows.push(BlockRow { family, index, con });
        con
    };
    let name = |family: RowFamily, idx: String| format!("s{s}_{}_{idx}", family.tag());

    for i in 0..ni {
        for r in 0..nr {
            let f = RowFamily::Coverage;
            let c = Constraint::new(vec![(lambda[(i, r)], 1.0)], Sense::Le, sc.coverage[(i, r)] as f64);
            add(model, f, i * nr + r, c.named(name(f, format!("{i}_{r}"))));
        }
    }
    for i in 0..ni {
        let f = RowFamily::UserAccess;
        let terms = (0..nr).map(|r| (lambda[(i, r)], 1.0)).collect();
        add(model, f, i, Constraint::new(terms, Sense::Eq, 1.0).named(name(f, i.to_string())));
    }
    for r in 0..nr {
        let f = RowFamily::RuPlacement;
        let terms = (0..nu).map(|u| (theta[(r, u)], 1.0)).collect();
        add(model, f, r, Constraint::new(terms, Sense::Eq, 1.0).named(name(f, r.to_string())));
    }
    for r in 0..nr {
        for u in 0..nu {
            let f = RowFamily::Eligibility;
            let c = Constraint::new(vec![(theta[(r, u)], 1.0)], Sense::Le, topo.zeta[(r, u)] as f64);
            add(model, f, r * nu + u, c.named(name(f, format!("{r}_{u}"))));
        }
    }
    let mut capacity_rows = Vec::with_capacity(nu);
    for u in 0..nu {
        let f = RowFamily::DuCapacity;
        let mut terms = Vec::new();
        for pr in pairs.iter().filter(|pr| pr.u == u) {
            let w = sc.traffic[pr.i];
            terms.push((pr.x, w * (prm.f_a + prm.f_b)));
            terms.push((pr.y, -w * prm.f_b));
        }
        let c = match cap {
            CapacityLink::Variables(p) => {
                terms.push((p[u], -1.0));
                Constraint::new(terms, Sense::Le, 0.0)
            }
            CapacityLink::Fixed(p) => Constraint::new(terms, Sense::Le, p[u]),
        };
        capacity_rows.push(add(model, f, u, c.named(name(f, u.to_string()))));
    }
    for v in 0..topo.n_cu {
        let f = RowFamily::CuCapacity;
        let mut terms = Vec::new();
        for pr in pairs.iter().filter(|pr| topo.eta[(pr.u, v)] == 1) {
            let w = sc.traffic[pr.i];
            terms.push((pr.x, w * prm.f_c));
            terms.push((pr.y, w * prm.f_b));
        }
        add(model, f, v, Constraint::new(terms, Sense::Le, prm.sigma).named(name(f, v.to_string())));
    }
    for i in 0..ni {
        let f = RowFamily::Delay;
        let c = Constraint::new(vec![(d[i], 1.0)], Sense::Le, sc.delay_budget[i]);
        add(model, f, i, c.named(name(f, i.to_string())));
    }
    for i in 0..ni {
        let f = RowFamily::Latency;
        let mut terms = vec![(d[i], 1.0)];
        for pr in pairs.iter().filter(|pr| pr.i == i) {
            let base = prm.delta * topo.dist_ru[(pr.r, pr.u)] + prm.d_split_edge;
            terms.push((pr.x, -base));
            terms.push((pr.y, -(prm.d_split_central - prm.d_split_edge)));
        }
        add(model, f, i, Constraint::new(terms, Sense::Eq, 0.0).named(name(f, i.to_string())));
    }
    for (k, pr) in pairs.iter().enumerate() {
        let (l, t, p) = (lambda[(pr.i, pr.r)], theta[(pr.r, pr.u)], psi[(pr.r, pr.u)]);
        let tag = format!("{}_{}_{}", pr.i, pr.r, pr.u);
        let lin = [
            (RowFamily::LinXLambda, vec![(pr.x, 1.0), (l, -1.0)], 0.0),
            (RowFamily::LinXTheta, vec![(pr.x, 1.0), (t, -1.0)], 0.0),
            (RowFamily::LinXLower, vec![(l, 1.0), (t, 1.0), (pr.x, -1.0)], 1.0),
            (RowFamily::LinYX, vec![(pr.y, 1.0), (pr.x, -1.0)], 0.0),
            (RowFamily::LinYPsi, vec![(pr.y, 1.0), (p, -1.0)], 0.0),
            (RowFamily::LinYLower, vec![(pr.x, 1.0), (p, 1.0), (pr.y, -1.0)], 1.0),
        ];
        for (f, terms, rhs) in lin {
            add(model, f, k, Constraint::new(terms, Sense::Le, rhs).named(name(f, tag.clone())));
        }
    }
    if form == Formulation::Tightened {
        for i in 0..ni {
            for r in 0..nr {
                if !sc.covered(i, r) {
                    continue;
                }
                let f = RowFamily::Link;
                let mut terms: Vec<(VarId, f64)> =
                    pairs.iter().filter(|pr| pr.i == i && pr.r == r).map(|pr| (pr.x, 1.0)).collect();
                terms.push((lambda[(i, r)], -1.0));
                let c = Constraint::new(terms, Sense::Eq, 0.0).named(name(f, format!("{i}_{r}")));
                add(model, f, i * nr + r, c);
            }
        }
    }

    ScenarioBlock { scenario: s, lambda, theta, psi, d, pairs, rows, capacity_rows, binaries }
}

/// Read a binary assignment for `block` out of a solution vector.
pub fn block_assignment(block: &ScenarioBlock, values: &[f64]) -> crate::model::Assignment {
    let bit = |v: VarId| u8::from(values[v.0] > 0.5);
    let lam = &block.lambda;
    crate::model::Assignment {
        lambda: Matrix::from_fn(lam.rows(), lam.cols(), |i, r| bit(lam[(i, r)])),
        theta: Matrix::from_fn(block.theta.rows(), block.theta.cols(), |r, u| bit(block.theta[(r, u)])),
        psi: Matrix::from_fn(block.psi.rows(), block.psi.cols(), |r, u| bit(block.psi[(r, u)])),
    }
}
