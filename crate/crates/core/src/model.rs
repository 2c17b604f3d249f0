//! Basket definition: assets with local volatility and a common jump, weights,
//! Brownian correlation and the Poisson intensity.
//!
//! Each asset follows
//!
//! ```text
//! dS_i(t) = σ_i(t, S_i(t)) dW_i(t) + h_i S_i(t-) dM(t),    M(t) = N(t) - λt
//! ```
//!
//! with one Poisson process `N` shared by all assets and Brownian motions
//! correlated through `ρ`. Interest rates are zero.

use std::fmt;
use std::sync::Arc;

use crate::error::{PricingError, Result};

/// Diagonal jitter accepted for numerically indefinite correlation matrices.
pub const CORRELATION_JITTER: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

/// A user-supplied local volatility function.
pub trait VolFunction: Send + Sync + fmt::Debug {
    /// Volatility level σ(t, S), in price units per √time.
    fn sigma(&self, t: f64, s: f64) -> f64;
    /// ∂σ/∂S at (t, S).
    fn dsigma_ds(&self, t: f64, s: f64) -> f64;
    fn is_time_independent(&self) -> bool;
    /// Times where σ is not smooth in t; quadrature splits panels there.
    fn time_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Local volatility σ(t, S) of a single asset.
#[derive(Clone)]
pub enum LocalVolatility {
    /// σ(t, S) = σ̂·S.
    BlackScholes { sigma: f64 },
    /// σ(t, S) = α·S^β.
    Cev { alpha: f64, beta: f64 },
    /// σ(t, S) = α(t)·S^β with α linearly interpolated between knots and
    /// held flat outside them.
    TermCev { beta: f64, times: Vec<f64>, alphas: Vec<f64> },
    Custom(Arc<dyn VolFunction>),
}

impl fmt::Debug for LocalVolatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BlackScholes { sigma } => f.debug_struct("BlackScholes").field("sigma", sigma).finish(),
            Self::Cev { alpha, beta } => f
                .debug_struct("Cev")
                .field("alpha", alpha)
                .field("beta", beta)
                .finish(),
            Self::TermCev { beta, times, alphas } => f
                .debug_struct("TermCev")
                .field("beta", beta)
                .field("times", times)
                .field("alphas", alphas)
                .finish(),
            Self::Custom(inner) => f.debug_tuple("Custom").field(inner).finish(),
        }
    }
}

impl LocalVolatility {
    pub fn sigma(&self, t: f64, s: f64) -> f64 {
        match self {
            Self::BlackScholes { sigma } => sigma * s.max(0.0),
            Self::Cev { alpha, beta } => cev(*alpha, *beta, s),
            Self::TermCev { beta, times, alphas } => cev(interp_alpha(times, alphas, t), *beta, s),
            Self::Custom(inner) => inner.sigma(t, s),
        }
    }

    pub fn dsigma_ds(&self, t: f64, s: f64) -> f64 {
        match self {
            Self::BlackScholes { sigma } => *sigma,
            Self::Cev { alpha, beta } => cev_slope(*alpha, *beta, s),
            Self::TermCev { beta, times, alphas } => cev_slope(interp_alpha(times, alphas, t), *beta, s),
            Self::Custom(inner) => inner.dsigma_ds(t, s),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            Self::BlackScholes { .. } | Self::Cev { .. } => true,
            Self::TermCev { alphas, .. } => alphas.windows(2).all(|w| w[0] == w[1]),
            Self::Custom(inner) => inner.is_time_independent(),
        }
    }

    pub fn time_breakpoints(&self) -> Vec<f64> {
        match self {
            Self::TermCev { times, .. } => times.clone(),
            Self::Custom(inner) => inner.time_breakpoints(),
            _ => Vec::new(),
        }
    }

    /// The proportional volatility σ̂ when σ(t, S) = σ̂·S, i.e. Black–Scholes
    /// or CEV with β = 1.
    pub fn lognormal_sigma(&self) -> Option<f64> {
        match self {
            Self::BlackScholes { sigma } => Some(*sigma),
            Self::Cev { alpha, beta } if *beta == 1.0 => Some(*alpha),
            _ => None,
        }
    }

    fn violations(&self, asset: usize) -> Vec<String> {
        let mut out = Vec::new();
        let check_cev = |out: &mut Vec<String>, alpha: f64, beta: f64| {
            if !alpha.is_finite() || alpha < 0.0 {
                out.push(format!("asset {asset}: CEV alpha must be finite and >= 0, got {alpha}"));
            }
            if !beta.is_finite() || beta <= 0.0 || beta > 1.0 {
                out.push(format!("asset {asset}: CEV beta must lie in (0, 1], got {beta}"));
            }
        };
        match self {
            Self::BlackScholes { sigma } => check_cev(&mut out, *sigma, 1.0),
            Self::Cev { alpha, beta } => check_cev(&mut out, *alpha, *beta),
            Self::TermCev { beta, times, alphas } => {
                if times.is_empty() || times.len() != alphas.len() {
                    out.push(format!(
                        "asset {asset}: term CEV needs matching non-empty times and alphas ({} vs {})",
                        times.len(),
                        alphas.len()
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
                    out.push(format!("asset {asset}: term CEV times must be finite and strictly increasing"));
                }
                for &a in alphas {
                    check_cev(&mut out, a, *beta);
                }
                if alphas.is_empty() {
                    check_cev(&mut out, 0.0, *beta);
                }
            }
            Self::Custom(_) => {}
        }
        out
    }
}

fn cev(alpha: f64, beta: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if beta == 1.0 {
        alpha * s
    } else {
        alpha * s.powf(beta)
    }
}

fn cev_slope(alpha: f64, beta: f64, s: f64) -> f64 {
    if beta == 1.0 {
        alpha
    } else if s <= 0.0 {
        0.0
    } else {
        alpha * beta * s.powf(beta - 1.0)
    }
}

fn interp_alpha(times: &[f64], alphas: &[f64], t: f64) -> f64 {
    match times.iter().position(|&x| x > t) {
        Some(0) => alphas[0],
        None => *alphas.last().unwrap_or(&0.0),
        Some(j) => {
            let (t0, t1) = (times[j - 1], times[j]);
            let u = (t - t0) / (t1 - t0);
            alphas[j - 1] + u * (alphas[j] - alphas[j - 1])
        }
    }
}

/// One basket constituent.
#[derive(Debug, Clone)]
pub struct JumpDiffusionAsset {
    pub initial_price: f64,
    /// Fractional jump size h_i; -1 means default to zero on the first jump.
    pub jump_size: f64,
    pub vol: LocalVolatility,
}

impl JumpDiffusionAsset {
    pub fn new(initial_price: f64, jump_size: f64, vol: LocalVolatility) -> Self {
        Self {
            initial_price,
            jump_size,
            vol,
        }
    }
}

/// Square correlation matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn identity(n: usize) -> Self {
        Self::uniform(n, 0.0)
    }

    /// All off-diagonal entries equal to `rho`.
    pub fn uniform(n: usize, rho: f64) -> Self {
        let mut data = vec![rho; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    /// Builds from nested rows. Fails only on a ragged or non-square shape.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PricingError::InvalidInput(format!(
                "correlation matrix must be square ({n} rows)"
            )));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    fn force_unit_diagonal(&mut self) -> bool {
        let mut changed = false;
        for i in 0..self.n {
            let d = &mut self.data[i * self.n + i];
            if *d != 1.0 {
                *d = 1.0;
                changed = true;
            }
        }
        changed
    }
}

/// Lower-triangular factor L with L·Lᵀ = ρ (up to the documented jitter).
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
    /// Diagonal jitter that was needed, 0 when the plain factorisation worked.
    pub jitter: f64,
}

impl LowerTriangular {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes `L·z` into `out`.
    #[inline]
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..i * self.n + i + 1];
            out[i] = row.iter().zip(z).map(|(l, x)| l * x).sum();
        }
    }

    /// Largest elementwise deviation of L·Lᵀ from `rho`.
    pub fn reconstruction_error(&self, rho: &CorrelationMatrix) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.get(i, k) * self.get(j, k)).sum();
                worst = worst.max((s - rho.get(i, j)).abs());
            }
        }
        worst
    }
}

/// Cholesky factor of a correlation matrix. Matrices that fail only by
/// rounding (smallest eigenvalue above −1e−10) are factored with
/// [`CORRELATION_JITTER`] added to the diagonal.
pub fn cholesky_lower(rho: &CorrelationMatrix) -> Result<LowerTriangular> {
    match cholesky_strict(rho, 0.0) {
        Ok(l) => Ok(l),
        Err(first) => cholesky_strict(rho, CORRELATION_JITTER).map_err(|_| first),
    }
}

fn cholesky_strict(rho: &CorrelationMatrix, jitter: f64) -> Result<LowerTriangular> {
    let n = rho.n;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = rho.get(j, j) + jitter;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(PricingError::NotPositiveSemidefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = rho.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(LowerTriangular { n, data: l, jitter })
}

/// Outcome of [`BasketSpec::validate`]: violated invariants plus notes about
/// inputs that were normalised.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(PricingError::InvalidInput(self.violations.join("; ")))
        }
    }
}

/// A basket of jump-diffusion assets sharing one Poisson driver.
#[derive(Debug, Clone)]
pub struct BasketSpec {
    pub assets: Vec<JumpDiffusionAsset>,
    pub weights: Vec<f64>,
    correlation: CorrelationMatrix,
    pub intensity: f64,
    diagonal_forced: bool,
}

impl BasketSpec {
    /// Assembles a basket. The correlation diagonal is forced to 1; nothing
    /// else is checked here, see [`BasketSpec::validate`].
    pub fn new(
        assets: Vec<JumpDiffusionAsset>,
        weights: Vec<f64>,
        mut correlation: CorrelationMatrix,
        intensity: f64,
    ) -> Self {
        let diagonal_forced = correlation.force_unit_diagonal();
        Self {
            assets,
            weights,
            correlation,
            intensity,
            diagonal_forced,
        }
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.correlation
    }

    /// S(0) = Σ w_i S_i(0).
    pub fn basket_spot(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.assets)
            .map(|(w, a)| w * a.initial_price)
            .sum()
    }

    pub fn all_time_independent(&self) -> bool {
        self.assets.iter().all(|a| a.vol.is_time_independent())
    }

    /// Union of all assets' time breakpoints, sorted.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.assets.iter().flat_map(|a| a.vol.time_breakpoints()).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let v = &mut report.violations;
        let n = self.assets.len();
        if n == 0 {
            v.push("basket has no assets".into());
        }
        if self.weights.len() != n {
            v.push(format!("expected {n} weights, got {}", self.weights.len()));
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                v.push(format!("weight {i} must be finite and >= 0, got {w}"));
            }
        }
        for (i, a) in self.assets.iter().enumerate() {
            if !a.initial_price.is_finite() || a.initial_price <= 0.0 {
                v.push(format!("asset {i}: initial price must be > 0, got {}", a.initial_price));
            }
            if !a.jump_size.is_finite() {
                v.push(format!("asset {i}: jump size must be finite"));
            } else if a.jump_size < -1.0 {
                v.push(format!("asset {i}: jump size below -1 ({})", a.jump_size));
            }
            v.extend(a.vol.violations(i));
        }
        if !self.intensity.is_finite() || self.intensity < 0.0 {
            v.push(format!("jump intensity must be finite and >= 0, got {}", self.intensity));
        }

        let rho = &self.correlation;
        if rho.dim() != n {
            v.push(format!("correlation matrix is {0}x{0}, expected {n}x{n}", rho.dim()));
        } else {
            let mut entries_ok = true;
            for i in 0..n {
                for j in 0..n {
                    let r = rho.get(i, j);
                    if !r.is_finite() || !(-1.0..=1.0).contains(&r) {
                        v.push(format!("correlation out of [-1,1] at ({i},{j}): {r}"));
                        entries_ok = false;
                    }
                    if j > i && (r - rho.get(j, i)).abs() > SYMMETRY_TOL {
                        v.push(format!("correlation not symmetric at ({i},{j})"));
                        entries_ok = false;
                    }
                }
            }
            if entries_ok {
                match cholesky_lower(rho) {
                    Ok(l) if l.jitter > 0.0 => report.warnings.push(format!(
                        "correlation matrix factored with diagonal jitter {:e}",
                        l.jitter
                    )),
                    Ok(_) => {}
                    Err(e) => v.push(e.to_string()),
                }
            }
        }
        if self.weights.len() == n && n > 0 && self.basket_spot() <= 0.0 {
            v.push("basket spot S(0) must be > 0".into());
        }
        if self.diagonal_forced {
            report.warnings.push("correlation diagonal reset to 1".into());
        }
        report
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.assets.len() {
            Ok(())
        } else {
            Err(PricingError::IndexOutOfRange {
                index: i,
                len: self.assets.len(),
            })
        }
    }

    /// σ_i(t, S_i(0)).
    pub fn sigma0(&self, i: usize, t: f64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.sigma0_unchecked(i, t))
    }

    /// ∂σ_i/∂S evaluated at (t, S_i(0)).
    pub fn sigma1(&self, i: usize, t: f64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.sigma1_unchecked(i, t))
    }

    /// Weighted cross-volatility Σ_j w_j σ_i^(k)(t) σ_j^(0)(t) ρ_ij for
    /// `order` k ∈ {0, 1}.
    pub fn tilde_sigma(&self, i: usize, order: u8, t: f64) -> Result<f64> {
        self.check_index(i)?;
        if order > 1 {
            return Err(PricingError::InvalidInput(format!(
                "tilde sigma is defined for orders 0 and 1, got {order}"
            )));
        }
        let lead = if order == 0 {
            self.sigma0_unchecked(i, t)
        } else {
            self.sigma1_unchecked(i, t)
        };
        Ok(lead * self.cross_sum(i, t))
    }

    #[inline]
    pub(crate) fn sigma0_unchecked(&self, i: usize, t: f64) -> f64 {
        let a = &self.assets[i];
        a.vol.sigma(t, a.initial_price)
    }

    #[inline]
    pub(crate) fn sigma1_unchecked(&self, i: usize, t: f64) -> f64 {
        let a = &self.assets[i];
        a.vol.dsigma_ds(t, a.initial_price)
    }

    /// Σ_j w_j σ_j^(0)(t) ρ_ij.
    pub(crate) fn cross_sum(&self, i: usize, t: f64) -> f64 {
        (0..self.len())
            .map(|j| self.weights[j] * self.sigma0_unchecked(j, t) * self.correlation.get(i, j))
            .sum()
    }
}
