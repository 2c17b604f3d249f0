//! Pricing of arithmetic basket calls on assets driven by local volatility
//! and a common Poisson jump factor.
//!
//! Engines: second-order expansion lower bound ([`lba`]), exact conditioning
//! bounds for lognormal volatilities ([`closed_form`]), Monte Carlo ([`mc`])
//! and a linearised-variance PIDE ([`aea`]).

pub mod aea;
pub mod black_scholes;
pub mod closed_form;
pub mod error;
pub mod expansion;
pub mod lba;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod result;

pub use error::{PricingError, Result};
pub use model::{BasketSpec, CorrelationMatrix, JumpDiffusionAsset, LocalVolatility, VolFunction};
pub use result::{Method, PricingResult};
