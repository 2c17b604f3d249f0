//! Lower bound approximation: a Poisson mixture over the jump count of
//! E[(c·x² + a1(k)·x + a0(k))⁺] with x standard normal, each term in closed
//! form.

use crate::error::Result;
use crate::expansion::{
    expansion_coefficients, quadratic_from_sums, ExpansionCoefficients, JumpSums, LbaConvention, QuadraticPayoff,
    QuadratureConfig,
};
use crate::model::BasketSpec;
use crate::numerics::{normal_mass, normal_pdf, x_pdf, DoubleDouble};
use crate::result::{Method, PricingResult};

/// Tail mass guaranteed by adaptive truncation.
pub const ADAPTIVE_TAIL: f64 = 1e-12;
/// Tail mass above which a truncated sum is flagged.
pub const TAIL_WARNING: f64 = 1e-6;
/// Number of terms in the fixed ten-term truncation.
pub const PAPER_COMPAT_TERMS: u32 = 10;

/// How the Poisson series over the jump count is cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationMode {
    /// k = 0..=9.
    PaperCompat,
    /// k = 0..=k_max.
    Fixed(u32),
    /// Smallest k_max with tail mass below 1e−12, capped at
    /// λT + 12√(λT + 1) + 20.
    #[default]
    Adaptive,
}

/// A resolved truncation: the last jump count summed and the probability
/// mass left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonTruncation {
    pub mode: TruncationMode,
    pub k_max: u32,
    pub tail_bound: f64,
}

impl PoissonTruncation {
    pub fn resolve(mode: TruncationMode, mean: f64) -> Self {
        let k_max = match mode {
            TruncationMode::PaperCompat => PAPER_COMPAT_TERMS - 1,
            TruncationMode::Fixed(k) => k,
            TruncationMode::Adaptive => {
                let cap = (mean + 12.0 * (mean + 1.0).sqrt() + 20.0).ceil() as u32;
                (0..=cap).find(|&k| poisson_tail(mean, k) < ADAPTIVE_TAIL).unwrap_or(cap)
            }
        };
        Self {
            mode,
            k_max,
            tail_bound: poisson_tail(mean, k_max),
        }
    }

    pub fn warning(&self) -> Option<String> {
        (self.tail_bound > TAIL_WARNING).then(|| {
            format!(
                "Poisson series truncated at k = {} leaves tail mass {:.3e}",
                self.k_max, self.tail_bound
            )
        })
    }
}

/// P(N = k) for N ~ Poisson(mean).
///
/// The product e^{−mean}·Π (mean / j) is carried in double-double for
/// moderate k; very large k falls back to log space.
pub fn poisson_pmf(mean: f64, k: u32) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k > 1000 {
        let log_p = -mean + f64::from(k) * mean.ln() - libm::lgamma(f64::from(k) + 1.0);
        return log_p.exp();
    }
    let mut acc = DoubleDouble::from_f64((-mean).exp());
    for j in 1..=k {
        acc = acc.mul_f64(mean).div_f64(f64::from(j));
    }
    acc.to_f64()
}

/// P(N > k), summed forward to avoid cancellation in 1 − CDF.
pub fn poisson_tail(mean: f64, k: u32) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = poisson_pmf(mean, k + 1);
    let mut total = 0.0;
    let mut j = k + 1;
    loop {
        total += term;
        j += 1;
        term *= mean / f64::from(j);
        if term <= total * 1e-18 || term == 0.0 || j > k + 10_000 {
            break;
        }
    }
    total
}

/// ∫_lo^hi (c·x² + a1·x + a0) φ(x) dx using Φ and φ; the bounds may be
/// infinite.
fn quadratic_moment(c: f64, a1: f64, a0: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mass = normal_mass(lo, hi);
    let pdf = |x: f64| if x.is_infinite() { 0.0 } else { normal_pdf(x) };
    let first = pdf(lo) - pdf(hi);
    let second = mass + x_pdf(lo) - x_pdf(hi);
    c * second + a1 * first + a0 * mass
}

/// E[(c·x² + a1·x + a0)⁺] for x ~ N(0, 1), in closed form.
///
/// The integration region is determined by the real roots of the
/// quadratic; a coefficient c below 1e−14·(1 + |a0| + |a1|) is treated as
/// zero.
pub fn positive_part_quadratic_expectation(c: f64, a1: f64, a0: f64) -> f64 {
    let scale = 1.0 + a0.abs() + a1.abs();
    if c.abs() < 1e-14 * scale {
        if a1 == 0.0 {
            return a0.max(0.0);
        }
        let root = -a0 / a1;
        return if a1 > 0.0 {
            quadratic_moment(0.0, a1, a0, root, f64::INFINITY)
        } else {
            quadratic_moment(0.0, a1, a0, f64::NEG_INFINITY, root)
        };
    }
    let disc = a1 * a1 - 4.0 * c * a0;
    if disc <= 0.0 {
        return if c > 0.0 { (c + a0).max(0.0) } else { 0.0 };
    }
    let sign = if a1 >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (a1 + sign * disc.sqrt());
    let (r1, r2) = {
        let x = q / c;
        let y = a0 / q;
        if x < y {
            (x, y)
        } else {
            (y, x)
        }
    };
    if c > 0.0 {
        quadratic_moment(c, a1, a0, f64::NEG_INFINITY, r1) + quadratic_moment(c, a1, a0, r2, f64::INFINITY)
    } else {
        quadratic_moment(c, a1, a0, r1, r2)
    }
}

/// Settings for [`price_lba`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LbaSettings {
    pub truncation: TruncationMode,
    pub convention: LbaConvention,
    pub quadrature: QuadratureConfig,
}

impl LbaSettings {
    /// The settings under which the published comparison tables are
    /// reproduced: jump slope divided by T and eleven Poisson terms.
    pub fn published_tables() -> Self {
        Self {
            truncation: TruncationMode::Fixed(PAPER_COMPAT_TERMS),
            convention: LbaConvention::PublishedTables,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Per-k quadratics and weights behind one LBA price.
#[derive(Debug, Clone, PartialEq)]
pub struct LbaBreakdown {
    pub coefficients: ExpansionCoefficients,
    pub truncation: PoissonTruncation,
    pub slices: Vec<(f64, QuadraticPayoff)>,
}

impl LbaBreakdown {
    pub fn price(&self) -> f64 {
        self.slices
            .iter()
            .map(|(p, q)| p * positive_part_quadratic_expectation(q.c, q.a1, q.a0))
            .sum()
    }
}

pub fn lba_breakdown(spec: &BasketSpec, maturity: f64, strike: f64, settings: &LbaSettings) -> Result<LbaBreakdown> {
    spec.validate().into_result()?;
    let coefficients = expansion_coefficients(spec, maturity, &settings.quadrature)?;
    let sums = JumpSums::new(&coefficients, spec);
    let mean = spec.intensity * maturity;
    let truncation = PoissonTruncation::resolve(settings.truncation, mean);
    let spot = spec.basket_spot();
    let slices = (0..=truncation.k_max)
        .map(|k| {
            let q = quadratic_from_sums(
                &coefficients,
                &sums,
                spot,
                spec.intensity,
                maturity,
                strike,
                k,
                settings.convention,
            );
            (poisson_pmf(mean, k), q)
        })
        .collect();
    Ok(LbaBreakdown {
        coefficients,
        truncation,
        slices,
    })
}

/// Lower bound approximation price of the basket call.
pub fn price_lba(spec: &BasketSpec, maturity: f64, strike: f64, settings: &LbaSettings) -> Result<PricingResult> {
    let breakdown = lba_breakdown(spec, maturity, strike, settings)?;
    let mut result =
        PricingResult::new(Method::Lba, breakdown.price()).with_implied_vol(spec.basket_spot(), strike, maturity);
    result.warnings.extend(breakdown.truncation.warning());
    Ok(result)
}
