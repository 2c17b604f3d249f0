//! The lognormal case σ_i(t, S) = σ̂_i·S, where terminal prices are explicit:
//!
//! ```text
//! S_i(T) = S_i(0) exp(−σ̂_i²T/2 − h_iλT + σ̂_i W_i(T) + N(T) ln(1 + h_i))
//! ```
//!
//! Conditioning on Λ = (N(T), W) with W the normalised projection
//! (1/σ_b) Σ a_i σ̂_i W_i(T) gives exact lower and upper bounds, the partial
//! exact approximation, and (for any volatility model) the Bachelier price of
//! the first-order expansion used as the Monte Carlo control variate.

use crate::error::{PricingError, Result};
use crate::expansion::{profile_integrals, QuadratureConfig, DEGENERATE_V2_REL};
use crate::lba::{poisson_pmf, PoissonTruncation, TruncationMode};
use crate::model::{BasketSpec, CorrelationMatrix};
use crate::numerics::{bisect, normal_cdf, normal_mass, normal_pdf};
use crate::result::{Method, PricingResult};

/// Search interval for conditioning-variable roots; the normal mass outside
/// it is below 1e−300.
const Y_RANGE: f64 = 40.0;
const ROOT_TOL: f64 = 1e-13;

/// Three-point weights of the second-moment correction.
pub const PEA_WEIGHTS: [f64; 3] = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];

/// Projection quantities for one set of surviving assets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    /// R_i = (1/σ_b) Σ_j a_j ρ_ij σ̂_i σ̂_j T.
    pub r: Vec<f64>,
    /// σ_b = √(Σ_ij a_i a_j ρ_ij σ̂_i σ̂_j T).
    pub sigma_b: f64,
    /// m = Σ a_i ln(1 + h_i).
    pub m: f64,
    /// Σ a_i.
    pub c_const: f64,
}

/// Assets with h_i = −1 and the projection rebuilt without them, used on
/// every slice with at least one jump.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultablePartition {
    pub defaulted: Vec<usize>,
    pub survivors: ProjectionBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpLognormalParams {
    pub maturity: f64,
    pub strike: f64,
    pub intensity: f64,
    /// σ̂_i.
    pub vols: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    /// a_i = w_i S_i(0) exp((−σ̂_i²/2 − h_iλ)T).
    pub a: Vec<f64>,
    /// Projection over all assets; the no-jump slice always uses it.
    pub full: ProjectionBasis,
    pub partition: Option<DefaultablePartition>,
    correlation: CorrelationMatrix,
}

impl JumpLognormalParams {
    fn basis(&self, k: u32) -> &ProjectionBasis {
        match (&self.partition, k) {
            (Some(p), k) if k >= 1 => &p.survivors,
            _ => &self.full,
        }
    }

    fn is_active(&self, i: usize, k: u32) -> bool {
        k == 0 || self.jump_sizes[i] > -1.0
    }

    /// Threshold d_k on the normal factor above which the linear lower
    /// bound c + m·k + σ_b·y exceeds the strike.
    pub fn threshold(&self, k: u32) -> f64 {
        let b = self.basis(k);
        let gap = self.strike - b.c_const - if k == 0 { 0.0 } else { b.m * f64::from(k) };
        if b.sigma_b > 0.0 {
            gap / b.sigma_b
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Per-slice quantities for N(T) = k.
    pub fn slice(&self, k: u32) -> Slice {
        let b = self.basis(k);
        let n = self.a.len();
        let mut g = vec![0.0; n];
        for (i, gi) in g.iter_mut().enumerate() {
            if self.is_active(i, k) {
                *gi = self.a[i] * jump_growth(self.jump_sizes[i], k);
            }
        }
        Slice {
            k,
            g,
            r: b.r.clone(),
            total_var: self.vols.iter().map(|s| s * s * self.maturity).collect(),
            vols: self.vols.clone(),
            correlation: self.correlation.clone(),
            maturity: self.maturity,
            threshold: self.threshold(k),
        }
    }
}

/// (1 + h)^k, with 0^0 = 1.
fn jump_growth(h: f64, k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        (1.0 + h).powi(k as i32)
    }
}

/// Quantities for a fixed jump count.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub k: u32,
    /// a_i (1 + h_i)^k, zero for assets removed by default.
    pub g: Vec<f64>,
    pub r: Vec<f64>,
    /// σ̂_i² T.
    pub total_var: Vec<f64>,
    vols: Vec<f64>,
    correlation: CorrelationMatrix,
    maturity: f64,
    pub threshold: f64,
}

impl Slice {
    /// E[S(T) | N(T) = k, W = y].
    pub fn conditional_mean(&self, y: f64) -> f64 {
        self.g
            .iter()
            .zip(&self.r)
            .zip(&self.total_var)
            .map(|((g, r), s)| g * (0.5 * (s - r * r) + r * y).exp())
            .sum()
    }

    fn mean_slope(&self, y: f64) -> f64 {
        self.g
            .iter()
            .zip(&self.r)
            .zip(&self.total_var)
            .map(|((g, r), s)| g * r * (0.5 * (s - r * r) + r * y).exp())
            .sum()
    }

    /// E[S(T)² | N(T) = k, W = y].
    pub fn conditional_second_moment(&self, y: f64) -> f64 {
        let n = self.g.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let rs = self.r[i] + self.r[j];
                let cov = self.correlation.get(i, j) * self.vols[i] * self.vols[j] * self.maturity;
                let v = self.total_var[i] + self.total_var[j] + 2.0 * cov - rs * rs;
                total += self.g[i] * self.g[j] * (rs * y + 0.5 * v).exp();
            }
        }
        total
    }

    /// ∫_lo^hi E[S(T) | y] φ(y) dy in closed form.
    fn mean_integral(&self, lo: f64, hi: f64) -> f64 {
        self.g
            .iter()
            .zip(&self.r)
            .zip(&self.total_var)
            .map(|((g, r), s)| g * (0.5 * s).exp() * normal_mass(lo - r, hi - r))
            .sum()
    }

    /// ∫ (E[S(T) | y] + shift − K)⁺ φ(y) dy over (lo, hi).
    ///
    /// The conditional mean is a positive combination of exponentials in y,
    /// hence convex, so the negative set of the integrand is a single
    /// interval located by bisection; the rest is closed form.
    pub fn positive_part_integral(&self, strike: f64, shift: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let level = strike - shift;
        let (neg_lo, neg_hi) = match self.negative_interval(level) {
            None => return self.linear_integral(level, lo, hi),
            Some(iv) => iv,
        };
        self.linear_integral(level, lo, hi.min(neg_lo)) + self.linear_integral(level, lo.max(neg_hi), hi)
    }

    /// ∫_lo^hi (E[S(T) | y] − level) φ(y) dy.
    fn linear_integral(&self, level: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.mean_integral(lo, hi) - level * normal_mass(lo, hi)
    }

    /// The open interval where E[S(T) | y] < level, if any.
    fn negative_interval(&self, level: f64) -> Option<(f64, f64)> {
        let f = |y: f64| self.conditional_mean(y) - level;
        let slope_lo = self.mean_slope(-Y_RANGE);
        let slope_hi = self.mean_slope(Y_RANGE);
        let y_min = if slope_lo >= 0.0 {
            -Y_RANGE
        } else if slope_hi <= 0.0 {
            Y_RANGE
        } else {
            bisect(|y| self.mean_slope(y), -Y_RANGE, Y_RANGE, ROOT_TOL)
        };
        if f(y_min) >= 0.0 {
            return None;
        }
        let left = if f(-Y_RANGE) < 0.0 {
            f64::NEG_INFINITY
        } else {
            bisect(f, -Y_RANGE, y_min, ROOT_TOL)
        };
        let right = if f(Y_RANGE) < 0.0 {
            f64::INFINITY
        } else {
            bisect(f, y_min, Y_RANGE, ROOT_TOL)
        };
        Some((left, right))
    }

    /// ∫_{−∞}^{d} var(S(T) | y) φ(y) dy in closed form.
    pub fn variance_below(&self, d: f64) -> f64 {
        let n = self.g.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.g[i] == 0.0 || self.g[j] == 0.0 {
                    continue;
                }
                let cov = self.correlation.get(i, j) * self.vols[i] * self.vols[j] * self.maturity;
                let rr = self.r[i] * self.r[j];
                let scale = self.g[i] * self.g[j] * (0.5 * (self.total_var[i] + self.total_var[j]) + rr).exp();
                total += scale * (cov - rr).exp_m1() * normal_cdf(d - self.r[i] - self.r[j]);
            }
        }
        total.max(0.0)
    }

    /// E[(S(T) − K) 1{y ≥ d}] in closed form.
    pub fn exact_upper_region(&self, strike: f64) -> f64 {
        self.mean_integral(self.threshold, f64::INFINITY) - strike * normal_mass(self.threshold, f64::INFINITY)
    }
}

fn lognormal_vols(spec: &BasketSpec) -> Result<Vec<f64>> {
    spec.assets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            a.vol.lognormal_sigma().ok_or_else(|| {
                PricingError::UnsupportedModel(format!(
                    "asset {i}: closed-form bounds need σ(t,S) = σ̂·S, got {:?}",
                    a.vol
                ))
            })
        })
        .collect()
}

fn projection(
    a: &[f64],
    vols: &[f64],
    jump_sizes: &[f64],
    rho: &CorrelationMatrix,
    maturity: f64,
    active: &[bool],
) -> ProjectionBasis {
    let n = a.len();
    let mut cov_a = vec![0.0; n];
    let mut var = 0.0;
    for i in 0..n {
        if !active[i] {
            continue;
        }
        for j in 0..n {
            if active[j] {
                cov_a[i] += a[j] * rho.get(i, j) * vols[i] * vols[j] * maturity;
            }
        }
        var += a[i] * cov_a[i];
    }
    let sigma_b = var.max(0.0).sqrt();
    let r = cov_a
        .iter()
        .zip(active)
        .map(|(&x, &on)| if on && sigma_b > 0.0 { x / sigma_b } else { 0.0 })
        .collect();
    let (mut m, mut c_const) = (0.0, 0.0);
    for i in 0..n {
        if active[i] {
            c_const += a[i];
            m += a[i] * jump_sizes[i].ln_1p();
        }
    }
    ProjectionBasis { r, sigma_b, m, c_const }
}

/// All closed-form quantities of the lognormal jump basket.
pub fn terminal_price_params(spec: &BasketSpec, maturity: f64, strike: f64) -> Result<JumpLognormalParams> {
    spec.validate().into_result()?;
    if !(maturity > 0.0) {
        return Err(PricingError::InvalidInput(format!("maturity must be > 0, got {maturity}")));
    }
    let vols = lognormal_vols(spec)?;
    let lambda = spec.intensity;
    let jump_sizes: Vec<f64> = spec.assets.iter().map(|a| a.jump_size).collect();
    let a: Vec<f64> = spec
        .assets
        .iter()
        .zip(&spec.weights)
        .zip(&vols)
        .map(|((asset, w), s)| w * asset.initial_price * ((-0.5 * s * s - asset.jump_size * lambda) * maturity).exp())
        .collect();
    let rho = spec.correlation();
    let all = vec![true; a.len()];
    let survivors: Vec<bool> = jump_sizes.iter().map(|&h| h > -1.0).collect();
    // m is only used with k ≥ 1, where defaulted assets are excluded
    let mut full = projection(&a, &vols, &jump_sizes, rho, maturity, &all);
    let defaulted: Vec<usize> = (0..a.len()).filter(|&i| !survivors[i]).collect();
    let partition = if defaulted.is_empty() {
        None
    } else {
        let s = projection(&a, &vols, &jump_sizes, rho, maturity, &survivors);
        full.m = s.m;
        Some(DefaultablePartition { defaulted, survivors: s })
    };
    Ok(JumpLognormalParams {
        maturity,
        strike,
        intensity: lambda,
        vols,
        jump_sizes,
        a,
        full,
        partition,
        correlation: rho.clone(),
    })
}

/// E[S(T) | N(T) = k, W = y].
pub fn conditional_expectation(params: &JumpLognormalParams, k: u32, y: f64) -> f64 {
    params.slice(k).conditional_mean(y)
}

/// Evaluates the conditioning bounds and the partial exact approximation
/// from one set of parameters and Poisson slices.
#[derive(Debug, Clone)]
pub struct LognormalJumpPricer {
    pub params: JumpLognormalParams,
    pub truncation: PoissonTruncation,
    slices: Vec<(f64, Slice)>,
    spot: f64,
}

impl LognormalJumpPricer {
    pub fn new(spec: &BasketSpec, maturity: f64, strike: f64, truncation: TruncationMode) -> Result<Self> {
        let params = terminal_price_params(spec, maturity, strike)?;
        let mean = params.intensity * maturity;
        let truncation = PoissonTruncation::resolve(truncation, mean);
        let slices = (0..=truncation.k_max)
            .map(|k| (poisson_pmf(mean, k), params.slice(k)))
            .collect();
        Ok(Self {
            params,
            truncation,
            slices,
            spot: spec.basket_spot(),
        })
    }

    fn strike(&self) -> f64 {
        self.params.strike
    }

    fn finish(&self, method: Method, price: f64) -> PricingResult {
        let mut r = PricingResult::new(method, price).with_implied_vol(self.spot, self.strike(), self.params.maturity);
        r.warnings.extend(self.truncation.warning());
        r
    }

    /// E[(E[S(T) | Λ] − K)⁺].
    pub fn lower_bound_value(&self) -> f64 {
        let strike = self.strike();
        self.slices
            .iter()
            .map(|(p, s)| p * s.positive_part_integral(strike, 0.0, f64::NEG_INFINITY, f64::INFINITY))
            .sum()
    }

    /// E[var(S(T) | Λ) 1{Λ below threshold}] and P(Λ below threshold).
    fn lower_region_moments(&self) -> (f64, f64) {
        let mut var = 0.0;
        let mut prob = 0.0;
        for (p, s) in &self.slices {
            var += p * s.variance_below(s.threshold);
            prob += p * normal_cdf(s.threshold);
        }
        (var, prob)
    }

    pub fn upper_bound_value(&self) -> f64 {
        let (var, prob) = self.lower_region_moments();
        self.lower_bound_value() + 0.5 * var.sqrt() * prob.sqrt()
    }

    /// ε0 = √(region-averaged conditional variance below the threshold).
    pub fn eps0(&self) -> f64 {
        let (var, prob) = self.lower_region_moments();
        if prob > 0.0 {
            (var / prob).sqrt()
        } else {
            0.0
        }
    }

    /// E[(S(T) − K) 1{c + mN + σ_b W ≥ K}], exact.
    pub fn exact_region_value(&self) -> f64 {
        let strike = self.strike();
        self.slices.iter().map(|(p, s)| p * s.exact_upper_region(strike)).sum()
    }

    pub fn pea_value_with_eps0(&self, eps0: f64) -> f64 {
        let strike = self.strike();
        let shift = 3f64.sqrt() * eps0;
        let shifts = [-shift, 0.0, shift];
        let mut total = self.exact_region_value();
        for (q, alpha) in PEA_WEIGHTS.iter().zip(shifts) {
            let part: f64 = self
                .slices
                .iter()
                .map(|(p, s)| p * s.positive_part_integral(strike, alpha, f64::NEG_INFINITY, s.threshold))
                .sum();
            total += q * part;
        }
        total
    }

    pub fn pea_value(&self) -> f64 {
        self.pea_value_with_eps0(self.eps0())
    }

    pub fn lower_bound(&self) -> PricingResult {
        self.finish(Method::Lb, self.lower_bound_value())
    }

    pub fn upper_bound(&self) -> PricingResult {
        self.finish(Method::Ub, self.upper_bound_value())
    }

    pub fn pea(&self) -> PricingResult {
        self.finish(Method::Pea, self.pea_value())
    }
}

pub fn price_lb_exact(spec: &BasketSpec, maturity: f64, strike: f64) -> Result<PricingResult> {
    Ok(LognormalJumpPricer::new(spec, maturity, strike, TruncationMode::Adaptive)?.lower_bound())
}

pub fn price_upper_bound(spec: &BasketSpec, maturity: f64, strike: f64) -> Result<PricingResult> {
    Ok(LognormalJumpPricer::new(spec, maturity, strike, TruncationMode::Adaptive)?.upper_bound())
}

pub fn price_pea(spec: &BasketSpec, maturity: f64, strike: f64) -> Result<PricingResult> {
    Ok(LognormalJumpPricer::new(spec, maturity, strike, TruncationMode::Adaptive)?.pea())
}

/// Bachelier call E[(μ + s·Z − K)⁺].
pub fn bachelier_call(mean: f64, sd: f64, strike: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - strike).max(0.0);
    }
    let d = (mean - strike) / sd;
    (mean - strike) * normal_cdf(d) + sd * normal_pdf(d)
}

/// Price of (S(0) + S^(1)(T) − K)⁺: a Poisson mixture of Bachelier calls
/// with mean S(0) + (k − λT) Σ w_i h_i S_i(0) and standard deviation v.
pub fn price_first_order_cv(spec: &BasketSpec, maturity: f64, strike: f64) -> Result<PricingResult> {
    spec.validate().into_result()?;
    let v2 = first_order_variance(spec, maturity)?;
    let spot = spec.basket_spot();
    let tol = DEGENERATE_V2_REL * spot * spot;
    if !(v2 > tol) {
        return Err(PricingError::DegenerateVolatility { v2, tol });
    }
    let price = first_order_mixture(spec, maturity, strike, v2.sqrt(), TruncationMode::Adaptive);
    let mut r = PricingResult::new(Method::Cv, price.0).with_implied_vol(spot, strike, maturity);
    r.warnings.extend(price.1.warning());
    Ok(r)
}

/// v² = Σ w_i ∫₀ᵀ tσ0_i dt.
pub(crate) fn first_order_variance(spec: &BasketSpec, maturity: f64) -> Result<f64> {
    let ints = profile_integrals(spec, maturity, &QuadratureConfig::default())?;
    Ok(spec.weights.iter().zip(&ints.i0).map(|(w, x)| w * x).sum())
}

pub(crate) fn first_order_mixture(
    spec: &BasketSpec,
    maturity: f64,
    strike: f64,
    v: f64,
    mode: TruncationMode,
) -> (f64, PoissonTruncation) {
    let mean = spec.intensity * maturity;
    let truncation = PoissonTruncation::resolve(mode, mean);
    let spot = spec.basket_spot();
    let jump_linear: f64 = spec
        .assets
        .iter()
        .zip(&spec.weights)
        .map(|(a, w)| w * a.jump_size * a.initial_price)
        .sum();
    let price = (0..=truncation.k_max)
        .map(|k| {
            let mu = spot + (f64::from(k) - mean) * jump_linear;
            poisson_pmf(mean, k) * bachelier_call(mu, v, strike)
        })
        .sum();
    (price, truncation)
}
