//! Monte Carlo benchmark for the basket call.
//!
//! Diffusion is stepped with Euler on a uniform grid; the common Poisson
//! jumps are simulated exactly (count, then uniform jump times) and inserted
//! into the grid. The compensator drift −h_iλ is integrated exactly over each
//! sub-step, so every asset stays a martingale under the scheme.
//!
//! Paths are generated in fixed blocks, each with its own ChaCha stream, so an
//! estimate depends only on the seed and never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::closed_form::price_first_order_cv;
use crate::error::{PricingError, Result};
use crate::model::{cholesky_lower, BasketSpec};
use crate::result::{Method, PricingResult};

pub const BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Euler steps per unit of time.
    pub steps_per_year: usize,
    pub seed: u64,
    pub use_control_variate: bool,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            steps_per_year: 200,
            seed: 42,
            use_control_variate: true,
            antithetic: false,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(PricingError::InvalidInput(format!("n_paths must be >= 2, got {}", self.n_paths)));
        }
        if self.steps_per_year < 1 {
            return Err(PricingError::InvalidInput("steps_per_year must be >= 1".into()));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(PricingError::InvalidInput(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }

    /// Number of grid steps for maturity `t`.
    pub fn steps_for(&self, t: f64) -> usize {
        ((self.steps_per_year as f64 * t).ceil() as usize).max(1)
    }
}

/// Terminal values per path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TerminalSample {
    /// S(T) = Σ w_i S_i(T).
    pub basket: Vec<f64>,
    /// S(0) + S^(1)(T) driven by the same noise.
    pub linearized: Vec<f64>,
    /// N(T).
    pub jumps: Vec<u32>,
}

impl TerminalSample {
    pub fn len(&self) -> usize {
        self.basket.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basket.is_empty()
    }

    fn append(&mut self, mut other: TerminalSample) {
        self.basket.append(&mut other.basket);
        self.linearized.append(&mut other.linearized);
        self.jumps.append(&mut other.jumps);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// Fitted control-variate coefficient; 0 when the control is off.
    pub cv_beta: f64,
    pub warnings: Vec<String>,
}

impl McEstimate {
    pub fn to_result(&self, spot: f64, strike: f64, maturity: f64) -> PricingResult {
        let mut r = PricingResult::new(Method::Mc, self.price).with_implied_vol(spot, strike, maturity);
        r.stderr = Some(self.stderr);
        r.warnings = self.warnings.clone();
        r
    }
}

struct PathModel<'a> {
    spec: &'a BasketSpec,
    chol: crate::model::LowerTriangular,
    maturity: f64,
    steps: usize,
    jump_linear: f64,
    poisson: Option<Poisson<f64>>,
}

impl<'a> PathModel<'a> {
    fn new(spec: &'a BasketSpec, maturity: f64, cfg: &McConfig) -> Result<Self> {
        let chol = cholesky_lower(spec.correlation())?;
        let mean = spec.intensity * maturity;
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| PricingError::InvalidInput(format!("Poisson mean {mean}: {e}")))?)
        } else {
            None
        };
        let jump_linear = spec
            .assets
            .iter()
            .zip(&spec.weights)
            .map(|(a, w)| w * a.jump_size * a.initial_price)
            .sum();
        Ok(Self {
            spec,
            chol,
            maturity,
            steps: cfg.steps_for(maturity),
            jump_linear,
            poisson,
        })
    }

    fn simulate_block(&self, seed: u64, block: usize, count: usize, antithetic: bool) -> TerminalSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let n = self.spec.len();
        let mut out = TerminalSample {
            basket: Vec::with_capacity(count),
            linearized: Vec::with_capacity(count),
            jumps: Vec::with_capacity(count),
        };
        let mut scratch = Scratch::new(n);
        let mut produced = 0;
        while produced < count {
            let jump_times = self.draw_jump_times(&mut rng);
            scratch.draw_normals(&mut rng, self.steps + jump_times.len());
            let signs: &[f64] = if antithetic { &[1.0, -1.0] } else { &[1.0] };
            for &sign in signs {
                let (basket, linear) = self.run_path(&jump_times, &mut scratch, sign);
                out.basket.push(basket);
                out.linearized.push(linear);
                out.jumps.push(jump_times.len() as u32);
                produced += 1;
            }
        }
        out
    }

    fn draw_jump_times(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let count = match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let mut times: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * self.maturity).collect();
        times.sort_by(f64::total_cmp);
        times
    }

    /// Returns (S(T), S(0) + S^(1)(T)) for one path.
    fn run_path(&self, jump_times: &[f64], scratch: &mut Scratch, sign: f64) -> (f64, f64) {
        let spec = self.spec;
        let n = spec.len();
        let lambda = spec.intensity;
        let dt_grid = self.maturity / self.steps as f64;
        for (s, a) in scratch.prices.iter_mut().zip(&spec.assets) {
            *s = a.initial_price;
        }
        let mut linear = 0.0;
        let mut t = 0.0;
        let mut next_jump = 0;
        let mut draw = 0;
        let mut grid_index = 1;
        while grid_index <= self.steps {
            let grid_t = if grid_index == self.steps {
                self.maturity
            } else {
                grid_index as f64 * dt_grid
            };
            let jump_here = next_jump < jump_times.len() && jump_times[next_jump] < grid_t;
            let t_next = if jump_here { jump_times[next_jump] } else { grid_t };
            let dt = t_next - t;
            if dt > 0.0 {
                let z = &scratch.normals[draw * n..(draw + 1) * n];
                self.chol.apply(z, &mut scratch.correlated);
                let sq = dt.sqrt() * sign;
                let t_mid = t + 0.5 * dt;
                for i in 0..n {
                    let asset = &spec.assets[i];
                    let dw = sq * scratch.correlated[i];
                    let s = scratch.prices[i];
                    let diffused = s + asset.vol.sigma(t, s) * dw;
                    let drift = (-asset.jump_size * lambda * dt).exp();
                    scratch.prices[i] = (diffused * drift).max(0.0);
                    linear += spec.weights[i] * asset.vol.sigma(t_mid, asset.initial_price) * dw;
                }
            }
            draw += 1;
            t = t_next;
            if jump_here {
                for (s, a) in scratch.prices.iter_mut().zip(&spec.assets) {
                    *s = (*s * (1.0 + a.jump_size)).max(0.0);
                }
                next_jump += 1;
            } else {
                grid_index += 1;
            }
        }
        let basket = scratch.prices.iter().zip(&spec.weights).map(|(s, w)| s * w).sum();
        let compensated = jump_times.len() as f64 - lambda * self.maturity;
        let linearized = spec.basket_spot() + linear + compensated * self.jump_linear;
        (basket, linearized)
    }
}

struct Scratch {
    prices: Vec<f64>,
    correlated: Vec<f64>,
    normals: Vec<f64>,
    n: usize,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            prices: vec![0.0; n],
            correlated: vec![0.0; n],
            normals: Vec::new(),
            n,
        }
    }

    fn draw_normals(&mut self, rng: &mut ChaCha8Rng, steps: usize) {
        self.normals.clear();
        self.normals
            .extend((0..steps * self.n).map(|_| -> f64 { StandardNormal.sample(rng) }));
    }
}

/// Simulates `cfg.n_paths` terminal baskets and their first-order
/// linearisations.
pub fn simulate_terminal_basket(spec: &BasketSpec, maturity: f64, cfg: &McConfig) -> Result<TerminalSample> {
    spec.validate().into_result()?;
    cfg.validate()?;
    if !(maturity > 0.0) {
        return Err(PricingError::InvalidInput(format!("maturity must be > 0, got {maturity}")));
    }
    let model = PathModel::new(spec, maturity, cfg)?;
    let blocks = cfg.n_paths.div_ceil(BLOCK_SIZE);
    let parts: Vec<TerminalSample> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK_SIZE.min(cfg.n_paths - b * BLOCK_SIZE);
            model.simulate_block(cfg.seed, b, count, cfg.antithetic)
        })
        .collect();
    let mut out = TerminalSample::default();
    for p in parts {
        out.append(p);
    }
    Ok(out)
}

/// Sample mean and standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages consecutive antithetic pairs.
fn pair_means(xs: &[f64]) -> Vec<f64> {
    xs.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn price_mc(spec: &BasketSpec, maturity: f64, strike: f64, cfg: &McConfig) -> Result<McEstimate> {
    let sample = simulate_terminal_basket(spec, maturity, cfg)?;
    let mut payoff: Vec<f64> = sample.basket.iter().map(|s| (s - strike).max(0.0)).collect();
    let mut control: Vec<f64> = sample.linearized.iter().map(|s| (s - strike).max(0.0)).collect();
    if cfg.antithetic {
        payoff = pair_means(&payoff);
        control = pair_means(&control);
    }
    let mut warnings = Vec::new();
    let control_mean = if cfg.use_control_variate {
        match price_first_order_cv(spec, maturity, strike) {
            Ok(r) => Some(r.price),
            Err(e) => {
                warnings.push(format!("control variate disabled: {e}"));
                None
            }
        }
    } else {
        None
    };
    let (price, stderr, beta) = match control_mean {
        Some(mu) => regression_estimate(&payoff, &control, mu),
        None => {
            let (m, se) = mean_and_stderr(&payoff);
            (m, se, 0.0)
        }
    };
    Ok(McEstimate {
        price,
        stderr,
        n_paths: cfg.n_paths,
        cv_beta: beta,
        warnings,
    })
}

/// Control-variate estimate with β fitted by least squares on the sample.
fn regression_estimate(y: &[f64], x: &[f64], x_mean_exact: f64) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in y.iter().zip(x) {
        sxy += (a - my) * (b - mx);
        sxx += (b - mx) * (b - mx);
    }
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let adjusted: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - beta * (b - x_mean_exact)).collect();
    let (price, stderr) = mean_and_stderr(&adjusted);
    (price, stderr, beta)
}
