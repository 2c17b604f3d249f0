//! Running a set of methods against one basket.

use basket_core::aea::{price_aea, PideGridConfig};
use basket_core::closed_form::{price_first_order_cv, LognormalJumpPricer};
use basket_core::lba::{price_lba, LbaSettings, TruncationMode};
use basket_core::mc::{price_mc, McConfig};
use basket_core::{BasketSpec, Method, PricingError, PricingResult};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::ConfigError;
use crate::report::ReportRow;

/// Numerical settings shared by every method in a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSettings {
    pub mc: McConfig,
    pub pide: PideGridConfig,
    pub lba: LbaSettings,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            mc: cfg.mc.into(),
            pide: cfg.pide.into(),
            lba: cfg.lba.into(),
        }
    }

    /// Truncation for the conditioning bounds, taken from the LBA settings.
    fn bound_truncation(&self) -> TruncationMode {
        self.lba.truncation
    }
}

/// Prices one method, attaching the implied volatility against the basket
/// spot.
pub fn price_method(
    spec: &BasketSpec,
    maturity: f64,
    strike: f64,
    method: Method,
    settings: &RunSettings,
) -> Result<PricingResult, PricingError> {
    let spot = spec.basket_spot();
    match method {
        Method::Lba => price_lba(spec, maturity, strike, &settings.lba),
        Method::Lb | Method::Ub | Method::Pea => {
            let pricer = LognormalJumpPricer::new(spec, maturity, strike, settings.bound_truncation())?;
            Ok(match method {
                Method::Lb => pricer.lower_bound(),
                Method::Ub => pricer.upper_bound(),
                _ => pricer.pea(),
            })
        }
        Method::Mc => price_mc(spec, maturity, strike, &settings.mc).map(|e| e.to_result(spot, strike, maturity)),
        Method::Aea => price_aea(spec, maturity, strike, &settings.pide),
        Method::Cv => price_first_order_cv(spec, maturity, strike),
    }
}

/// The result of one (strike, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceOutcome {
    pub strike: f64,
    pub method: Method,
    pub result: Result<PricingResult, PricingError>,
}

impl PriceOutcome {
    pub fn is_err(&self) -> bool {
        self.result.is_err()
    }
}

/// Prices every requested method at every strike of the config.
///
/// Pairs run in parallel; the output keeps strike-major, method-minor
/// order. A failing method yields an `Err` outcome without affecting the
/// others.
pub fn run_price(cfg: &ExperimentConfig) -> Result<Vec<PriceOutcome>, ConfigError> {
    let spec = cfg.basket_spec()?;
    let settings = RunSettings::from_config(cfg);
    let jobs: Vec<(f64, Method)> = cfg
        .strikes()
        .into_iter()
        .flat_map(|k| cfg.methods().into_iter().map(move |m| (k, m)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(strike, method)| PriceOutcome {
            strike,
            method,
            result: price_method(&spec, cfg.maturity, strike, method, &settings),
        })
        .collect())
}

/// Report rows for a price run. Relative errors are taken against the MC
/// price at the same strike when MC was requested and succeeded.
pub fn outcome_rows(cfg: &ExperimentConfig, outcomes: &[PriceOutcome]) -> Vec<ReportRow> {
    let multi_strike = cfg.strikes().len() > 1;
    outcomes
        .iter()
        .map(|o| {
            let mc = outcomes
                .iter()
                .find(|x| x.strike == o.strike && x.method == Method::Mc)
                .and_then(|x| x.result.as_ref().ok())
                .map(|r| r.price);
            let config = if multi_strike {
                format!("{}@K={}", cfg.id, o.strike)
            } else {
                cfg.id.clone()
            };
            match &o.result {
                Ok(r) => ReportRow {
                    config,
                    method: o.method.to_string(),
                    price: Some(r.price),
                    stderr: r.stderr,
                    iv: r.implied_vol,
                    rel_err: match (o.method, mc) {
                        (Method::Mc, _) | (_, None) => None,
                        (_, Some(m)) => Some(relative_error(r.price, m)),
                    },
                    published: None,
                },
                Err(_) => ReportRow::empty(config, o.method.to_string()),
            }
        })
        .collect()
}

/// |x − reference| / reference.
pub fn relative_error(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}
