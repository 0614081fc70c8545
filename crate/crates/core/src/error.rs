use thiserror::Error;

/// Errors raised while building or evaluating a network scenario.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "invalid geometry: distance {distance_m:.3} m is below the minimum {min_distance_m} m"
    )]
    InvalidGeometry {
        distance_m: f64,
        min_distance_m: f64,
    },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}): {context}")]
    NotPositiveSemidefinite {
        min_eigenvalue: f64,
        context: String,
    },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e}): {context}")]
    NotHermitian { asymmetry: f64, context: String },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("pilot plan needs {needed} pilots per cell but only {available} are available")]
    InsufficientPilots { needed: usize, available: usize },

    #[error("negative power {value} for user ({cell}, {user})")]
    NegativePower {
        cell: usize,
        user: usize,
        value: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("drop {drop}: {source}")]
    Drop {
        drop: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
