mod common;

use basket_core::aea::{
    local_variance_coefficients, price_aea, solve_pide, solve_pide_with, PideGridConfig,
};
use basket_core::closed_form::bachelier_call;
use common::{bs, cev, eta_jump, four_assets};

fn grid(n_k: usize, steps_per_year: usize) -> PideGridConfig {
    PideGridConfig {
        n_k,
        steps_per_year,
        min_points_per_sd: 0.0,
        ..PideGridConfig::default()
    }
}

#[test]
fn bachelier_limit_across_strikes() {
    let g = grid(800, 800);
    for strike in [80.0, 100.0, 115.0] {
        let sol = solve_pide_with(100.0, 0.0, 0.0, 2.0, strike, &g, |_| Ok((150.0, 0.0))).unwrap();
        let exact = bachelier_call(100.0, 300f64.sqrt(), strike);
        assert!((sol.price_at_strike / exact - 1.0).abs() < 1e-3, "K={strike}: {} vs {exact}", sol.price_at_strike);
    }
}

#[test]
fn grid_doubling_converges() {
    let spec = four_assets([eta_jump(-0.25); 4], bs(0.2), 0.3);
    let approx = local_variance_coefficients(&spec, 1.0).unwrap();
    let p: Vec<f64> = [(200, 200), (400, 400), (800, 800)]
        .iter()
        .map(|&(n, m)| solve_pide(&spec, 1.0, 100.0, &approx, &grid(n, m)).unwrap().price_at_strike)
        .collect();
    let ratio = (p[2] - p[1]).abs() / (p[1] - p[0]).abs();
    assert!(ratio < 0.6, "{p:?} ratio {ratio}");
}

#[test]
fn solution_is_monotone_in_strike() {
    let spec = four_assets([eta_jump(-0.25); 4], cev(0.5, 0.5), 1.0);
    let approx = local_variance_coefficients(&spec, 3.0).unwrap();
    let sol = solve_pide(&spec, 3.0, 100.0, &approx, &PideGridConfig::default()).unwrap();
    assert_eq!(sol.monotonicity_violations, 0);
    assert!(sol.prices.windows(2).all(|w| w[1] <= w[0] + 1e-8));
}

#[test]
fn published_cev_value() {
    let spec = four_assets([eta_jump(-0.25); 4], cev(0.5, 1.0), 0.3);
    let r = price_aea(&spec, 3.0, 100.0, &PideGridConfig::default()).unwrap();
    assert!((r.price / 24.14 - 1.0).abs() < 0.01, "{}", r.price);
}

#[test]
fn time_dependent_coefficients_are_refreshed() {
    let vol = basket_core::LocalVolatility::TermCev {
        beta: 1.0,
        times: vec![0.0, 1.0],
        alphas: vec![0.1, 0.3],
    };
    let spec = four_assets([0.0; 4], vol, 0.0);
    let approx = local_variance_coefficients(&spec, 1.0).unwrap();
    let sol = solve_pide(&spec, 1.0, 100.0, &approx, &PideGridConfig::default()).unwrap();
    // frozen terminal coefficients would overstate the accumulated variance
    let frozen = solve_pide_with(100.0, 0.0, 0.0, 1.0, 100.0, &PideGridConfig::default(), |_| Ok((approx.a, approx.b)))
        .unwrap();
    assert!(sol.price_at_strike < frozen.price_at_strike);
}
