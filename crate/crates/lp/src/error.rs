use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model has binary variables; relax it or use solve_milp")]
    HasBinaries,
    #[error("numerical trouble: {0}")]
    Numerical(String),
}
