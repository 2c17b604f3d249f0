//! Special functions and small numerical kernels shared by the pricers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, evaluated through `erfc` so both
/// tails keep full relative precision.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Probability mass of a standard normal on `[lo, hi]`. Uses whichever tail
/// representation avoids cancellation.
pub fn normal_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        normal_cdf(-lo) - normal_cdf(-hi)
    } else {
        normal_cdf(hi) - normal_cdf(lo)
    }
}

/// `x * φ(x)` with the limits at ±∞ taken as zero.
#[inline]
pub(crate) fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * normal_pdf(x)
    }
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule: `panels` equal subintervals per segment, where the
    /// segments are `[a, b]` split at every breakpoint strictly inside it.
    pub fn composite_nodes(&self, a: f64, b: f64, panels: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
        cuts.push(b);
        let mut out = Vec::with_capacity((cuts.len() - 1) * panels * self.len());
        for seg in cuts.windows(2) {
            let h = (seg[1] - seg[0]) / panels as f64;
            for p in 0..panels {
                let lo = seg[0] + p as f64 * h;
                out.extend(self.mapped(lo, lo + h));
            }
        }
        out
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[0]` and `upper[n-1]` are ignored. Returns `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c_prime = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    rhs[0] /= beta;
    for i in 1..n {
        c_prime[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c_prime[i - 1];
        if beta == 0.0 {
            return None;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    Some(())
}

/// Bisection for a sign change of `f` on `[lo, hi]`; `f(lo)` and `f(hi)`
/// must have opposite signs (or one of them be zero).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= x_tol || mid == lo || mid == hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unevaluated sum `hi + lo` used where plain f64 products lose too much.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        let lo = self.lo.mul_add(b, e);
        two_sum_quick(p, lo)
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        // remainder self - q1 * b, computed exactly for the hi part
        let p = q1 * b;
        let e = q1.mul_add(b, -p);
        let r = ((self.hi - p) - e + self.lo) / b;
        two_sum_quick(q1, r)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum_quick(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    let lo = b - (s - a);
    DoubleDouble { hi: s, lo }
}
