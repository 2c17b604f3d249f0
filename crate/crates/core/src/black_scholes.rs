//! Zero-rate Black–Scholes call and its inversion, used to quote every
//! engine price as an implied volatility.

use crate::error::{PricingError, Result};
use crate::numerics::normal_cdf;

pub const IMPLIED_VOL_LOW: f64 = 1e-6;
pub const IMPLIED_VOL_HIGH: f64 = 5.0;
const PRICE_TOL: f64 = 1e-10;
const VOL_TOL: f64 = 1e-10;

pub fn bs_call(spot: f64, strike: f64, maturity: f64, vol: f64) -> f64 {
    let intrinsic = (spot - strike).max(0.0);
    if maturity <= 0.0 || vol <= 0.0 {
        return intrinsic;
    }
    if strike <= 0.0 {
        return spot - strike;
    }
    let sd = vol * maturity.sqrt();
    let d1 = ((spot / strike).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    spot * normal_cdf(d1) - strike * normal_cdf(d2)
}

/// Black–Scholes volatility reproducing `price`, by bisection on
/// [1e−6, 5] until the price residual is below 1e−10 and the volatility
/// bracket is narrower than 1e−10.
pub fn implied_vol(price: f64, spot: f64, strike: f64, maturity: f64) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && maturity > 0.0) {
        return Err(PricingError::InvalidInput(format!(
            "implied vol needs positive spot, strike and maturity (got {spot}, {strike}, {maturity})"
        )));
    }
    let lower = (spot - strike).max(0.0);
    if !(price > lower && price < spot) {
        return Err(PricingError::NoArbitrage {
            price,
            lower,
            upper: spot,
        });
    }
    let (mut lo, mut hi) = (IMPLIED_VOL_LOW, IMPLIED_VOL_HIGH);
    if bs_call(spot, strike, maturity, hi) < price {
        return Err(PricingError::NoArbitrage {
            price,
            lower,
            upper: bs_call(spot, strike, maturity, hi),
        });
    }
    if bs_call(spot, strike, maturity, lo) > price {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let diff = bs_call(spot, strike, maturity, mid) - price;
        if (diff.abs() < PRICE_TOL && hi - lo < VOL_TOL) || hi - lo < 1e-15 {
            return Ok(mid);
        }
        if diff < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
