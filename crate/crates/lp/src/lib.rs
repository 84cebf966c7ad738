//! Linear and mixed-binary optimisation: a model container, a bounded revised
//! simplex with duals and infeasibility certificates, and best-bound
//! branch-and-bound.

mod dump;
mod error;
mod lu;
mod milp;
mod model;
mod simplex;
mod solve;

pub use dump::to_lp_string;
pub use error::LpError;
pub use milp::{
    branch_and_bound, branch_and_bound_ranked, solve_milp, MilpOptions, MilpSolution, MilpStatus,
};
pub use model::{
    relax, ConId, Constraint, LinearModel, PointViolation, Sense, VarId, VarKind, Variable,
};
pub use simplex::{Basis, LpStatus, Simplex, SimplexOptions, VarStatus};
pub use solve::{dual_objective, farkas_margin, solve_lp, LpSolution};

/// Row and bound feasibility tolerance used when checking solutions.
pub const FEAS_TOL: f64 = 1e-6;
/// Relative optimality tolerance.
pub const OPT_TOL: f64 = 1e-6;
/// Distance from 0 or 1 below which a binary value counts as integral.
pub const INT_TOL: f64 = 1e-6;
