use thiserror::Error;

/// Error type shared across the receiver laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge, residual {residual:.3e}")]
    Quadrature { residual: f64 },
    #[error("target {target:.6e} outside range ({lo:.6e}, {hi:.6e})")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("gso coefficient b = {b:.6} signals a non-contracting prototype")]
    NonContracting { b: f64 },
    #[error("variance collapse: b = {b:.12} too close to 1")]
    VarianceCollapse { b: f64 },
    #[error("state evolution fixed point is not unique ({roots} roots)")]
    NonUniqueFixedPoint { roots: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("lapack {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
