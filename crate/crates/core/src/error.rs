use thiserror::Error;

/// Errors produced by the norm solvers and their supporting kernels.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("rank {rank} is infeasible for dims {dims:?} (max {max})")]
    InfeasibleRank {
        rank: usize,
        dims: Vec<usize>,
        max: usize,
    },

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("point set does not span R^{dim} (smallest Gram eigenvalue {min_eigenvalue:e}); program is unbounded")]
    Unbounded { dim: usize, min_eigenvalue: f64 },

    #[error(
        "solver did not converge in {iterations} iterations \
         (primal residual {primal_residual:e}, stationarity residual {stationarity_residual:e})"
    )]
    NotConverged {
        iterations: usize,
        primal_residual: f64,
        stationarity_residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("estimate carries no witness vectors")]
    MissingWitness,

    #[error("stationarity residual {residual:e} exceeds extraction limit {limit:e}")]
    StationarityTooLarge { residual: f64, limit: f64 },

    #[error("feasibility oracle inconclusive for alpha in [{lo}, {hi}] (residual {residual:e})")]
    Inconclusive { lo: f64, hi: f64, residual: f64 },

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
