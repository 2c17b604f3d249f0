//! Second-order asymptotic expansion of the basket around the zero-noise
//! path, conditioned on the jump count N(T) and the Gaussian projection
//! Δ(T) = Σ_j w_j ∫ σ_j^(0) dW_j.
//!
//! Given N(T) = k and Δ(T) = v·x, the conditional mean of the expanded basket
//! S(0) + S^(1)(T) + S^(2)(T)/2, minus the strike, is the quadratic
//! `c·x² + a1(k)·x + a0(k)`.

use crate::error::{PricingError, Result};
use crate::model::BasketSpec;
use crate::numerics::GaussLegendre;

/// Degenerate-variance threshold, relative to S(0)².
pub const DEGENERATE_V2_REL: f64 = 1e-12;

/// Quadrature settings for time-dependent volatility profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Panels per smooth segment of [0, T].
    pub panels: usize,
    /// Relative change allowed when the panel count is doubled.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 8,
            panels: 8,
            rel_tol: 1e-9,
        }
    }
}

/// Per-asset time integrals of the cross-volatility profiles.
///
/// With tσk_i(t) = tilde_sigma(i, k, t):
/// - `i0` = ∫₀ᵀ tσ0_i dt
/// - `i1` = ∫₀ᵀ (T − t) tσ0_i dt
/// - `i2` = ∫₀ᵀ t·tσ1_i dt
/// - `i3` = ∫₀ᵀ (∫₀ᵗ tσ0_i ds) tσ1_i dt
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileIntegrals {
    pub i0: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
}

impl ProfileIntegrals {
    fn zeros(n: usize) -> Self {
        Self {
            i0: vec![0.0; n],
            i1: vec![0.0; n],
            i2: vec![0.0; n],
            i3: vec![0.0; n],
        }
    }

    fn max_rel_diff(&self, other: &Self) -> f64 {
        let pairs = [
            (&self.i0, &other.i0),
            (&self.i1, &other.i1),
            (&self.i2, &other.i2),
            (&self.i3, &other.i3),
        ];
        let mut worst: f64 = 0.0;
        for (a, b) in pairs {
            let scale = a.iter().chain(b.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                continue;
            }
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        worst
    }
}

/// Closed forms for time-independent volatility, quadrature otherwise.
pub fn profile_integrals(spec: &BasketSpec, maturity: f64, cfg: &QuadratureConfig) -> Result<ProfileIntegrals> {
    check_maturity(maturity)?;
    if spec.all_time_independent() {
        Ok(profile_integrals_closed_form(spec, maturity))
    } else {
        profile_integrals_quadrature(spec, maturity, cfg)
    }
}

/// Constant-profile closed forms: I0 = tσ0·T, I1 = tσ0·T²/2,
/// I2 = tσ1·T²/2, I3 = tσ0·tσ1·T²/2.
pub fn profile_integrals_closed_form(spec: &BasketSpec, maturity: f64) -> ProfileIntegrals {
    let n = spec.len();
    let t = maturity;
    let mut out = ProfileIntegrals::zeros(n);
    for i in 0..n {
        let cross = spec.cross_sum(i, 0.0);
        let ts0 = spec.sigma0_unchecked(i, 0.0) * cross;
        let ts1 = spec.sigma1_unchecked(i, 0.0) * cross;
        out.i0[i] = ts0 * t;
        out.i1[i] = ts0 * t * t / 2.0;
        out.i2[i] = ts1 * t * t / 2.0;
        out.i3[i] = ts0 * ts1 * t * t / 2.0;
    }
    out
}

/// Composite Gauss–Legendre evaluation with one panel-doubling refinement;
/// the refined value is returned.
pub fn profile_integrals_quadrature(
    spec: &BasketSpec,
    maturity: f64,
    cfg: &QuadratureConfig,
) -> Result<ProfileIntegrals> {
    check_maturity(maturity)?;
    let rule = GaussLegendre::new(cfg.nodes_per_panel);
    let coarse = quadrature_pass(spec, maturity, &rule, cfg.panels);
    let fine = quadrature_pass(spec, maturity, &rule, 2 * cfg.panels);
    let diff = coarse.max_rel_diff(&fine);
    if diff > cfg.rel_tol {
        return Err(PricingError::Quadrature(format!(
            "profile integrals changed by {diff:e} (relative) when doubling panels"
        )));
    }
    Ok(fine)
}

fn quadrature_pass(spec: &BasketSpec, maturity: f64, rule: &GaussLegendre, panels: usize) -> ProfileIntegrals {
    let n = spec.len();
    let breaks = spec.time_breakpoints();
    let outer = rule.composite_nodes(0.0, maturity, panels, &breaks);
    let mut out = ProfileIntegrals::zeros(n);
    for &(t, w) in &outer {
        // cumulative ∫₀ᵗ tσ0 ds for every asset, same rule on [0, t]
        let inner = rule.composite_nodes(0.0, t, panels, &breaks);
        let mut cumulative = vec![0.0; n];
        for &(s, ws) in &inner {
            for (i, acc) in cumulative.iter_mut().enumerate() {
                *acc += ws * spec.sigma0_unchecked(i, s) * spec.cross_sum(i, s);
            }
        }
        for i in 0..n {
            let cross = spec.cross_sum(i, t);
            let ts0 = spec.sigma0_unchecked(i, t) * cross;
            let ts1 = spec.sigma1_unchecked(i, t) * cross;
            out.i0[i] += w * ts0;
            out.i1[i] += w * (maturity - t) * ts0;
            out.i2[i] += w * t * ts1;
            out.i3[i] += w * cumulative[i] * ts1;
        }
    }
    out
}

/// v², v, c and the profile integrals for one (basket, maturity).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    /// Var(Δ(T)) = Σ w_i I0_i.
    pub v2: f64,
    pub v: f64,
    /// Coefficient of x²: (1/v²) Σ w_i I3_i.
    pub c: f64,
    pub integrals: ProfileIntegrals,
    pub maturity: f64,
}

pub fn expansion_coefficients(spec: &BasketSpec, maturity: f64, cfg: &QuadratureConfig) -> Result<ExpansionCoefficients> {
    let integrals = profile_integrals(spec, maturity, cfg)?;
    let v2: f64 = spec.weights.iter().zip(&integrals.i0).map(|(w, x)| w * x).sum();
    let spot = spec.basket_spot();
    let tol = DEGENERATE_V2_REL * spot * spot;
    if !(v2 > tol) {
        return Err(PricingError::DegenerateVolatility { v2, tol });
    }
    let c = spec.weights.iter().zip(&integrals.i3).map(|(w, x)| w * x).sum::<f64>() / v2;
    Ok(ExpansionCoefficients {
        v2,
        v: v2.sqrt(),
        c,
        integrals,
        maturity,
    })
}

/// Which algebraic form of a0(k) and a1(k) to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LbaConvention {
    /// The conditional expectations as derived: drift factor (k − λT) in
    /// a0, jump slope (k/T − λ) in a1.
    #[default]
    Derived,
    /// a0's drift factor printed with the strike, (K − λT). Comparison only.
    LiteralA0,
    /// Derived a0, with the a1 jump slope additionally divided by T. This
    /// is the form that reproduces the published comparison tables; it
    /// coincides with `Derived` at T = 1.
    PublishedTables,
}

/// The quadratic `c·x² + a1·x + a0` for one jump count k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPayoff {
    pub k: u32,
    pub c: f64,
    pub a1: f64,
    pub a0: f64,
}

impl QuadraticPayoff {
    pub fn eval(&self, x: f64) -> f64 {
        (self.c * x + self.a1) * x + self.a0
    }
}

/// Jump-dependent sums shared by every k-slice.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JumpSums {
    /// Σ w_i h_i S_i(0)
    pub linear: f64,
    /// Σ w_i h_i² S_i(0)
    pub quadratic: f64,
    /// Σ w_i h_i (I1_i + S_i(0) I2_i)
    pub slope: f64,
}

impl JumpSums {
    pub fn new(coeffs: &ExpansionCoefficients, spec: &BasketSpec) -> Self {
        let mut sums = Self {
            linear: 0.0,
            quadratic: 0.0,
            slope: 0.0,
        };
        let ints = &coeffs.integrals;
        for (i, (a, &w)) in spec.assets.iter().zip(&spec.weights).enumerate() {
            let (h, s0) = (a.jump_size, a.initial_price);
            sums.linear += w * h * s0;
            sums.quadratic += w * h * h * s0;
            sums.slope += w * h * (ints.i1[i] + s0 * ints.i2[i]);
        }
        sums
    }
}

pub fn lba_quadratic(
    coeffs: &ExpansionCoefficients,
    spec: &BasketSpec,
    maturity: f64,
    strike: f64,
    k: u32,
    convention: LbaConvention,
) -> QuadraticPayoff {
    let sums = JumpSums::new(coeffs, spec);
    quadratic_from_sums(coeffs, &sums, spec.basket_spot(), spec.intensity, maturity, strike, k, convention)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn quadratic_from_sums(
    coeffs: &ExpansionCoefficients,
    sums: &JumpSums,
    spot: f64,
    intensity: f64,
    maturity: f64,
    strike: f64,
    k: u32,
    convention: LbaConvention,
) -> QuadraticPayoff {
    let kf = f64::from(k);
    let mean_jumps = intensity * maturity;
    let centred = kf - mean_jumps;

    let mut slope = (kf / maturity - intensity) * sums.slope / coeffs.v;
    if convention == LbaConvention::PublishedTables {
        slope /= maturity;
    }
    let drift_factor = match convention {
        LbaConvention::LiteralA0 => strike - mean_jumps,
        _ => centred,
    };
    let a0 = spot + drift_factor * sums.linear + 0.5 * sums.quadratic * (centred * centred - kf) - coeffs.c - strike;
    QuadraticPayoff {
        k,
        c: coeffs.c,
        a1: coeffs.v + slope,
        a0,
    }
}

fn check_maturity(maturity: f64) -> Result<()> {
    if maturity.is_finite() && maturity > 0.0 {
        Ok(())
    } else {
        Err(PricingError::InvalidInput(format!("maturity must be > 0, got {maturity}")))
    }
}
