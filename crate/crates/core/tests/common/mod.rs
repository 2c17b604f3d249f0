//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use basket_core::{BasketSpec, CorrelationMatrix, JumpDiffusionAsset, LocalVolatility};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || err <= 50.0 * f64::EPSILON * value.abs() || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod 7/15 on [a, b] to absolute tolerance `tol`,
/// additionally split at the given interior points.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, splits: &[f64], tol: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(splits.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let pieces = (pts.len() - 1) as f64;
    pts.windows(2).map(|w| adapt(&f, w[0], w[1], tol / pieces, 30)).sum()
}

/// E[g(Z)] for a standard normal Z over [−14, 14].
pub fn normal_expectation<F: Fn(f64) -> f64>(g: F, splits: &[f64], tol: f64) -> f64 {
    integrate(|x| g(x) * phi(x), -14.0, 14.0, splits, tol)
}

/// Gauss–Hermite rule for the standard normal weight, by Newton iteration
/// on the physicists' Hermite polynomials.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.855_75 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - ((j as f64) / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        out[i] = (z, 2.0 / (pp * pp));
        out[n - 1 - i] = (-z, 2.0 / (pp * pp));
    }
    let scale = std::f64::consts::PI.sqrt();
    out.into_iter()
        .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / scale))
        .collect()
}

/// Plain Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

pub fn poisson(mean: f64, k: u32) -> f64 {
    let mut p = (-mean).exp();
    for j in 1..=k {
        p *= mean / f64::from(j);
    }
    p
}

/// Four assets at 100, equal weights, pairwise correlation 0.3.
pub fn four_assets(h: [f64; 4], vol: LocalVolatility, lambda: f64) -> BasketSpec {
    let assets = h
        .iter()
        .map(|&hi| JumpDiffusionAsset::new(100.0, hi, vol.clone()))
        .collect();
    BasketSpec::new(assets, vec![0.25; 4], CorrelationMatrix::uniform(4, 0.3), lambda)
}

pub fn bs(sigma: f64) -> LocalVolatility {
    LocalVolatility::BlackScholes { sigma }
}

pub fn cev(alpha: f64, beta: f64) -> LocalVolatility {
    LocalVolatility::Cev { alpha, beta }
}

pub fn eta_jump(eta: f64) -> f64 {
    eta.exp() - 1.0
}
