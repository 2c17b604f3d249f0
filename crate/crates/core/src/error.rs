use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("asset index {index} out of range for a basket of {len} assets")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("correlation matrix is not positive semidefinite (pivot {pivot} = {value:e})")]
    NotPositiveSemidefinite { pivot: usize, value: f64 },

    #[error("degenerate volatility: v^2 = {v2:e} is below tolerance {tol:e}")]
    DegenerateVolatility { v2: f64, tol: f64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("PIDE solver unstable: {0}")]
    Unstable(String),

    #[error("price {price} outside no-arbitrage bounds ({lower}, {upper})")]
    NoArbitrage { price: f64, lower: f64, upper: f64 },
}

pub type Result<T> = std::result::Result<T, PricingError>;
