//! Asymptotic expansion approximation: the basket call surface C(T, K)
//! solves a forward PIDE in maturity and strike whose local variance is
//! replaced by the linearisation σ(T, K)² ≈ a(T) + b(T)(K − S(0)).
//!
//! ```text
//! C_T = λhK·C_K + ½σ²(T,K)·C_KK + λ(h+1)(C(T, K/(h+1)) − C(T, K))
//! ```
//!
//! Local terms are implicit (tridiagonal solve each step) and the nonlocal
//! jump term is explicit, read off the previous layer by linear
//! interpolation.

use crate::error::{PricingError, Result};
use crate::model::BasketSpec;
use crate::numerics::{solve_tridiagonal, GaussLegendre};
use crate::result::{Method, PricingResult};

/// Layer-to-layer growth of the max norm that aborts a solve.
pub const INSTABILITY_GROWTH: f64 = 10.0;
/// Increase in C along K above this counts as a monotonicity violation.
/// Cap on the refined strike grid.
pub const MAX_STRIKE_NODES: usize = 20_000;
pub const MONOTONICITY_TOL: f64 = 1e-8;

/// How σ_c² aggregates the C_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaCConvention {
    /// σ_c² = Σ_i w_i C_i.
    #[default]
    Indexed,
    /// The printed form Σ_i w_i C_j, read as (Σ_i w_i)·C_j inside b's sum.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVarianceApprox {
    pub maturity: f64,
    pub a: f64,
    pub b: f64,
    /// σ_i(T, S_i(0)).
    pub p: Vec<f64>,
    /// ∂σ_i/∂S at (T, S_i(0)).
    pub q: Vec<f64>,
    /// C_i = Σ_j w_j ρ_ij ∫₀ᵀ σ_i(t, S_i(0)) σ_j(t, S_j(0)) dt.
    pub c: Vec<f64>,
    pub sigma_c2: f64,
    /// Common jump size.
    pub jump_size: f64,
    pub spot: f64,
}

impl LocalVarianceApprox {
    /// a + b(K − S(0)) before flooring.
    pub fn raw_variance(&self, strike: f64) -> f64 {
        self.a + self.b * (strike - self.spot)
    }

    pub fn variance(&self, strike: f64) -> f64 {
        self.raw_variance(strike).max(0.0)
    }
}

/// The common jump size, or an error when assets differ.
pub fn common_jump_size(spec: &BasketSpec) -> Result<f64> {
    let h = spec.assets.first().map_or(0.0, |a| a.jump_size);
    if spec.assets.iter().any(|a| a.jump_size != h) {
        let hs: Vec<f64> = spec.assets.iter().map(|a| a.jump_size).collect();
        return Err(PricingError::UnsupportedModel(format!(
            "the PIDE approximation needs one jump size for all assets, got {hs:?}"
        )));
    }
    Ok(h)
}

pub fn local_variance_coefficients(spec: &BasketSpec, maturity: f64) -> Result<LocalVarianceApprox> {
    local_variance_coefficients_with(spec, maturity, SigmaCConvention::Indexed)
}

pub fn local_variance_coefficients_with(
    spec: &BasketSpec,
    maturity: f64,
    convention: SigmaCConvention,
) -> Result<LocalVarianceApprox> {
    spec.validate().into_result()?;
    let jump_size = common_jump_size(spec)?;
    if !(maturity > 0.0) {
        return Err(PricingError::InvalidInput(format!("maturity must be > 0, got {maturity}")));
    }
    let n = spec.len();
    let rho = spec.correlation();
    let w = &spec.weights;
    let p: Vec<f64> = spec
        .assets
        .iter()
        .map(|a| a.vol.sigma(maturity, a.initial_price))
        .collect();
    let q: Vec<f64> = spec
        .assets
        .iter()
        .map(|a| a.vol.dsigma_ds(maturity, a.initial_price))
        .collect();

    let nodes = if spec.all_time_independent() {
        vec![(0.5 * maturity, maturity)]
    } else {
        GaussLegendre::new(16).composite_nodes(0.0, maturity, 8, &spec.time_breakpoints())
    };
    let mut c = vec![0.0; n];
    for &(t, weight) in &nodes {
        let s: Vec<f64> = spec.assets.iter().map(|a| a.vol.sigma(t, a.initial_price)).collect();
        for i in 0..n {
            for j in 0..n {
                c[i] += weight * w[j] * rho.get(i, j) * s[i] * s[j];
            }
        }
    }
    let sigma_c2: f64 = w.iter().zip(&c).map(|(wi, ci)| wi * ci).sum();
    let weight_sum: f64 = w.iter().sum();

    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..n {
        for j in 0..n {
            let base = w[i] * w[j] * rho.get(i, j) * p[i] * p[j];
            a += base;
            let ratio = |k: usize| if p[k] != 0.0 { q[k] / p[k] * c[k] } else { 0.0 };
            let denom = match convention {
                SigmaCConvention::Indexed => sigma_c2,
                SigmaCConvention::Literal => weight_sum * c[j],
            };
            if denom == 0.0 {
                return Err(PricingError::DegenerateVolatility { v2: denom, tol: 0.0 });
            }
            b += base * (ratio(i) + ratio(j)) / denom;
        }
    }
    Ok(LocalVarianceApprox {
        maturity,
        a,
        b,
        p,
        q,
        c,
        sigma_c2,
        jump_size,
        spot: spec.basket_spot(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PideGridConfig {
    /// Strike intervals on [0, K_max].
    pub n_k: usize,
    /// Time steps per unit maturity.
    pub steps_per_year: usize,
    /// K_max as a multiple of S(0).
    pub k_max_multiple: f64,
    /// Lower bound on strike nodes per basket standard deviation √(aT);
    /// `n_k` is raised to meet it (up to [`MAX_STRIKE_NODES`]). Zero keeps
    /// `n_k` as given.
    pub min_points_per_sd: f64,
    pub keep_surface: bool,
}

impl Default for PideGridConfig {
    fn default() -> Self {
        Self {
            n_k: 400,
            steps_per_year: 400,
            k_max_multiple: 5.0,
            min_points_per_sd: 16.0,
            keep_surface: false,
        }
    }
}

impl PideGridConfig {
    /// The grid with `n_k` raised so that ΔK ≤ sd / `min_points_per_sd`.
    pub fn resolved(&self, spot: f64, terminal_sd: f64) -> Self {
        let mut g = *self;
        if self.min_points_per_sd > 0.0 && terminal_sd > 0.0 {
            let needed = (self.k_max_multiple * spot * self.min_points_per_sd / terminal_sd).ceil();
            g.n_k = g.n_k.max((needed as usize).min(MAX_STRIKE_NODES));
        }
        g
    }

    /// Time steps for maturity `t`, raised if needed so that
    /// Δt ≤ 1/(2λ(1 + |h|)).
    pub fn steps_for(&self, t: f64, intensity: f64, jump_size: f64) -> usize {
        let base = (self.steps_per_year as f64 * t).ceil().max(1.0);
        let cap = 2.0 * intensity * (1.0 + jump_size.abs()) * t;
        base.max(cap.ceil()) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PideSolution {
    pub strikes: Vec<f64>,
    /// C(T, K_j).
    pub prices: Vec<f64>,
    /// All layers when requested, first layer being the payoff.
    pub surface: Option<Vec<Vec<f64>>>,
    pub times: Vec<f64>,
    pub price_at_strike: f64,
    /// Grid nodes where a + b(K − S(0)) was negative, summed over layers.
    pub floored_nodes: usize,
    pub monotonicity_violations: usize,
    pub warnings: Vec<String>,
}

/// Linear interpolation on a uniform grid starting at 0; zero beyond the end.
fn interpolate(values: &[f64], dk: f64, x: f64) -> f64 {
    let pos = x / dk;
    let last = values.len() - 1;
    if pos >= last as f64 {
        return 0.0;
    }
    let j = pos.floor() as usize;
    let u = pos - j as f64;
    values[j] + u * (values[j + 1] - values[j])
}

/// Marches the PIDE from the payoff at T = 0 to `maturity`.
///
/// `coefficients` yields the local-variance linearisation at each layer
/// time; for time-homogeneous models it may return a fixed value.
pub fn solve_pide_with<F>(
    spot: f64,
    intensity: f64,
    jump_size: f64,
    maturity: f64,
    strike: f64,
    grid: &PideGridConfig,
    mut coefficients: F,
) -> Result<PideSolution>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if grid.n_k < 3 || !(grid.k_max_multiple > 1.0) {
        return Err(PricingError::InvalidInput(format!(
            "PIDE grid needs n_k >= 3 and K_max > S(0), got {grid:?}"
        )));
    }
    if !(jump_size > -1.0) {
        return Err(PricingError::UnsupportedModel(format!(
            "the PIDE needs jump size > -1, got {jump_size}"
        )));
    }
    let k_max = grid.k_max_multiple * spot;
    let n_k = grid.n_k;
    let dk = k_max / n_k as f64;
    let strikes: Vec<f64> = (0..=n_k).map(|j| j as f64 * dk).collect();
    let steps = grid.steps_for(maturity, intensity, jump_size);
    let dt = maturity / steps as f64;
    let growth = 1.0 + jump_size;

    let mut layer: Vec<f64> = strikes.iter().map(|k| (spot - k).max(0.0)).collect();
    let mut surface = grid.keep_surface.then(|| vec![layer.clone()]);
    let mut times = vec![0.0];
    let interior = n_k - 1;
    let (mut lower, mut diag, mut upper) = (vec![0.0; interior], vec![0.0; interior], vec![0.0; interior]);
    let mut rhs = vec![0.0; interior];
    let mut floored_nodes = 0;
    let mut monotonicity_violations = 0;
    let mut warnings = Vec::new();
    let mut prev_norm = layer.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    for step in 1..=steps {
        let t = step as f64 * dt;
        let (a, b) = coefficients(t)?;
        for idx in 0..interior {
            let j = idx + 1;
            let k = strikes[j];
            let raw = a + b * (k - spot);
            if raw < 0.0 {
                floored_nodes += 1;
            }
            let diffusion = 0.5 * raw.max(0.0) / (dk * dk);
            let velocity = intensity * jump_size * k;
            // central differences while monotone, upwind otherwise
            let (lo, up) = if diffusion >= 0.5 * velocity.abs() / dk {
                (diffusion - 0.5 * velocity / dk, diffusion + 0.5 * velocity / dk)
            } else if velocity > 0.0 {
                (diffusion, diffusion + velocity / dk)
            } else {
                (diffusion - velocity / dk, diffusion)
            };
            lower[idx] = -dt * lo;
            upper[idx] = -dt * up;
            diag[idx] = 1.0 + dt * (lo + up + intensity * growth);
            let shifted = if intensity > 0.0 {
                interpolate(&layer, dk, k / growth)
            } else {
                0.0
            };
            rhs[idx] = layer[j] + dt * intensity * growth * shifted;
            if idx == 0 {
                rhs[idx] += dt * lo * spot;
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs)
            .ok_or_else(|| PricingError::Unstable(format!("singular PIDE system at t = {t}")))?;
        layer[0] = spot;
        layer[1..n_k].copy_from_slice(&rhs);
        layer[n_k] = 0.0;

        let norm = layer.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !norm.is_finite() || (prev_norm > 0.0 && norm > INSTABILITY_GROWTH * prev_norm) {
            return Err(PricingError::Unstable(format!(
                "PIDE max norm grew from {prev_norm:.6e} to {norm:.6e} at t = {t:.6} (step {step}, dt = {dt:.3e}, dK = {dk:.3e})"
            )));
        }
        prev_norm = norm;
        monotonicity_violations += layer.windows(2).filter(|w| w[1] - w[0] > MONOTONICITY_TOL).count();
        times.push(t);
        if let Some(s) = surface.as_mut() {
            s.push(layer.clone());
        }
    }

    if floored_nodes > 0 {
        warnings.push(format!(
            "local variance a + b(K - S0) was negative and floored at {floored_nodes} grid nodes"
        ));
    }
    if monotonicity_violations > 0 {
        warnings.push(format!(
            "PIDE solution increased in strike at {monotonicity_violations} nodes (tolerance {MONOTONICITY_TOL:e})"
        ));
    }
    let price_at_strike = if strike >= k_max { 0.0 } else { interpolate(&layer, dk, strike.max(0.0)) };
    Ok(PideSolution {
        strikes,
        prices: layer,
        surface,
        times,
        price_at_strike,
        floored_nodes,
        monotonicity_violations,
        warnings,
    })
}

/// Solves with the basket's linearised local variance. For time-dependent
/// volatilities the coefficients are refreshed at every layer.
pub fn solve_pide(
    spec: &BasketSpec,
    maturity: f64,
    strike: f64,
    approx: &LocalVarianceApprox,
    grid: &PideGridConfig,
) -> Result<PideSolution> {
    let fixed = (approx.a, approx.b);
    let homogeneous = spec.all_time_independent();
    let grid = grid.resolved(approx.spot, (approx.a.max(0.0) * maturity).sqrt());
    solve_pide_with(
        approx.spot,
        spec.intensity,
        approx.jump_size,
        maturity,
        strike,
        &grid,
        |t| {
            if homogeneous || t >= maturity {
                Ok(fixed)
            } else {
                let c = local_variance_coefficients(spec, t)?;
                Ok((c.a, c.b))
            }
        },
    )
}

pub fn price_aea(spec: &BasketSpec, maturity: f64, strike: f64, grid: &PideGridConfig) -> Result<PricingResult> {
    let approx = local_variance_coefficients(spec, maturity)?;
    let sol = solve_pide(spec, maturity, strike, &approx, grid)?;
    let mut r = PricingResult::new(Method::Aea, sol.price_at_strike).with_implied_vol(approx.spot, strike, maturity);
    r.warnings = sol.warnings;
    Ok(r)
}
