mod common;

use basket_core::black_scholes::{bs_call, implied_vol};
use basket_core::closed_form::LognormalJumpPricer;
use basket_core::lba::{poisson_pmf, positive_part_quadratic_expectation, price_lba, LbaSettings, TruncationMode};
use basket_core::{BasketSpec, CorrelationMatrix, JumpDiffusionAsset};
use common::{bs, cev};
use proptest::prelude::*;

fn lognormal_basket(vols: &[f64], jumps: &[f64], rho: f64, lambda: f64) -> BasketSpec {
    let n = vols.len();
    let assets = vols
        .iter()
        .zip(jumps)
        .map(|(&s, &h)| JumpDiffusionAsset::new(100.0, h, bs(s)))
        .collect();
    BasketSpec::new(assets, vec![1.0 / n as f64; n], CorrelationMatrix::uniform(n, rho), lambda)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn positive_part_dominates_jensen(c in -10.0..10.0f64, a1 in -10.0..10.0f64, a0 in -10.0..10.0f64) {
        let e = positive_part_quadratic_expectation(c, a1, a0);
        prop_assert!(e >= 0.0);
        prop_assert!(e >= (c + a0) - 1e-12);
        // (q)⁺ ≤ |q| ≤ |c|x² + |a1||x| + |a0|
        prop_assert!(e <= c.abs() + a1.abs() * (2.0 / std::f64::consts::PI).sqrt() + a0.abs() + 1e-12);
    }

    #[test]
    fn poisson_weights_sum_to_one(mean in 0.0..25.0f64) {
        let total: f64 = (0..200).map(|k| poisson_pmf(mean, k)).sum();
        prop_assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn implied_vol_round_trip(vol in 0.02..2.0f64, strike in 60.0..160.0f64, t in 0.1..5.0f64) {
        let price = bs_call(100.0, strike, t, vol);
        prop_assume!(price - (100.0 - strike).max(0.0) > 1e-6 && price < 100.0 - 1e-6);
        let back = implied_vol(price, 100.0, strike, t).unwrap();
        prop_assert!((back - vol).abs() < 1e-8, "{} vs {}", back, vol);
    }

    #[test]
    fn tilde_sigma_is_linear_in_weights(alpha in 0.1..0.8f64, beta in 0.3..1.0f64, scale in 0.1..5.0f64) {
        let assets: Vec<_> = (0..3).map(|i| JumpDiffusionAsset::new(80.0 + 20.0 * i as f64, 0.0, cev(alpha, beta))).collect();
        let spec = BasketSpec::new(assets.clone(), vec![0.2, 0.3, 0.5], CorrelationMatrix::uniform(3, 0.4), 0.0);
        let scaled = BasketSpec::new(assets, vec![0.2 * scale, 0.3 * scale, 0.5 * scale], CorrelationMatrix::uniform(3, 0.4), 0.0);
        for i in 0..3 {
            for order in [0u8, 1] {
                let a = spec.tilde_sigma(i, order, 0.5).unwrap();
                let b = scaled.tilde_sigma(i, order, 0.5).unwrap();
                prop_assert!((b - scale * a).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditioning_bounds_are_ordered(
        vols in prop::collection::vec(0.05..0.6f64, 1..5),
        jump_seed in prop::collection::vec(-0.6..0.6f64, 5),
        rho in 0.0..0.95f64,
        lambda in 0.0..2.0f64,
        t in 0.2..3.0f64,
        strike in 60.0..140.0f64,
    ) {
        let jumps = &jump_seed[..vols.len()];
        let spec = lognormal_basket(&vols, jumps, rho, lambda);
        let p = LognormalJumpPricer::new(&spec, t, strike, TruncationMode::Adaptive).unwrap();
        let (lb, pea, ub) = (p.lower_bound_value(), p.pea_value(), p.upper_bound_value());
        prop_assert!(lb <= ub + 1e-10);
        prop_assert!(lb <= pea + 1e-10 && pea <= ub + 1e-10, "{} {} {}", lb, pea, ub);
        prop_assert!(lb >= (100.0 - strike).max(0.0) - 1e-9);
    }

    #[test]
    fn lba_is_bounded_by_forward_and_intrinsic(
        alpha in 0.1..0.6f64,
        beta in 0.3..1.0f64,
        lambda in 0.0..1.5f64,
        t in 0.2..3.0f64,
        strike in 60.0..140.0f64,
    ) {
        let spec = common::four_assets([-0.2, 0.1, 0.0, 0.2], cev(alpha, beta), lambda);
        let price = price_lba(&spec, t, strike, &LbaSettings::default()).unwrap().price;
        prop_assert!(price >= -1e-12);
        prop_assert!(price >= (100.0 - strike) - 1e-9);
    }
}
