//! Stochastic DU capacity planning with flexible functional splits: data model,
//! extensive-form MILP, Benders decomposition with cut filtering, and the
//! scenario generator.

pub mod abd;
pub mod benders;
pub mod error;
pub mod eval;
pub mod extensive;
pub mod formulation;
pub mod matrix;
pub mod model;
pub mod studio;

pub use error::{CoreError, Result};
pub use eval::{evaluate_assignment, total_cost, validate_instance, Evaluation, ValidationReport};
pub use formulation::{add_scenario_block, CapacityLink, Formulation, RowFamily, ScenarioBlock};
pub use matrix::Matrix;
pub use model::{Assignment, CostBreakdown, PlanSolution, ProblemInstance, ProblemParams, Scenario, Topology};
pub use extensive::{
    build_extensive, solve_extensive, solve_fix_du, ExtensiveOptions, ExtensiveOutcome, ObjectiveMode, SolveStatus,
    VariableCatalog,
};
pub use abd::{filter_cuts, precompute_dominance, DominanceRelation, FilterConfig, FilterGuard};
pub use benders::{run_benders, BendersCut, BendersOptions, BendersResult, BendersTrace, CutKind};
