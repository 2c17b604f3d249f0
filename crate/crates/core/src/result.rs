use std::fmt;
use std::str::FromStr;

use crate::black_scholes::implied_vol;
use crate::error::PricingError;

/// Pricing method identifiers, as used in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Lower bound approximation on the second-order expansion.
    Lba,
    /// Exact conditioning lower bound (lognormal jump case).
    Lb,
    /// Matching upper bound.
    Ub,
    /// Partial exact approximation.
    Pea,
    Mc,
    /// Linearised-variance PIDE.
    Aea,
    /// First-order expansion price (the Monte Carlo control variate).
    Cv,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Mc,
        Method::Lb,
        Method::Ub,
        Method::Pea,
        Method::Aea,
        Method::Lba,
        Method::Cv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lba => "lba",
            Method::Lb => "lb",
            Method::Ub => "ub",
            Method::Pea => "pea",
            Method::Mc => "mc",
            Method::Aea => "aea",
            Method::Cv => "cv",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| PricingError::InvalidInput(format!("unknown method '{s}'")))
    }
}

/// A price from one method, with its Monte Carlo standard error when
/// applicable and the Black–Scholes implied volatility when the price is
/// inside the no-arbitrage band.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub method: Method,
    pub price: f64,
    pub stderr: Option<f64>,
    pub implied_vol: Option<f64>,
    pub warnings: Vec<String>,
}

impl PricingResult {
    pub fn new(method: Method, price: f64) -> Self {
        Self {
            method,
            price,
            stderr: None,
            implied_vol: None,
            warnings: Vec::new(),
        }
    }

    /// Fills `implied_vol` against the basket spot.
    pub fn with_implied_vol(mut self, spot: f64, strike: f64, maturity: f64) -> Self {
        self.implied_vol = implied_vol(self.price, spot, strike, maturity).ok();
        self
    }
}
