//! Properties of the rate function, the root solver and the finite-n diagnostics.

use maglab::asymptotics::{
    classify_regime, finite_n_lemma_a, ln_g, nu_star, stirling_at_levels, threshold_at, Case, PredictedLimit,
    ScalingSpec,
};
use maglab::{AffinityMatrix, AttributePmf, MagParams};
use proptest::prelude::*;

fn config_a() -> MagParams {
    MagParams::new(
        2,
        1,
        AttributePmf::new(0.5).unwrap(),
        AffinityMatrix::new(0.8, 0.5, 0.2).unwrap(),
    )
    .unwrap()
}

#[test]
fn ln_g_shape_on_grid() {
    for mu in [0.1, 0.35, 0.5, 0.8] {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let values: Vec<f64> = grid.iter().map(|&nu| ln_g(nu, mu).unwrap()).collect();
        for (&nu, &v) in grid.iter().zip(&values) {
            assert!(v <= 1e-12);
            if (nu - mu).abs() > 1e-9 {
                assert!(v < 0.0);
            }
        }
        for i in 1..grid.len() {
            if grid[i] <= mu {
                assert!(values[i] > values[i - 1], "increasing below mu at {}", grid[i]);
            } else if grid[i - 1] >= mu {
                assert!(values[i] < values[i - 1], "decreasing above mu at {}", grid[i]);
            }
        }
    }
}

proptest! {
    #[test]
    fn ln_g_is_midpoint_concave(a in 0.0..=1.0f64, b in 0.0..=1.0f64, mu in 0.01..0.99f64) {
        let mid = ln_g(0.5 * (a + b), mu).unwrap();
        let chord = 0.5 * (ln_g(a, mu).unwrap() + ln_g(b, mu).unwrap());
        prop_assert!(mid >= chord - 1e-12);
    }

    #[test]
    fn threshold_is_affine_and_increasing(rho in 0.05..8.0f64, nu in 0.0..0.99f64) {
        let p = config_a();
        let h = 0.01;
        let (t0, t1, t2) = (threshold_at(nu, rho, &p), threshold_at(nu + h / 2.0, rho, &p), threshold_at(nu + h, rho, &p));
        prop_assert!(t2 > t0);
        prop_assert!(((t2 - t1) - (t1 - t0)).abs() < 1e-12);
    }
}

#[test]
fn nu_star_residual_over_grid() {
    for i in 0..20 {
        let mu1 = 0.05 + 0.9 * i as f64 / 19.0;
        let critical = -1.0 / (1.0 - mu1).ln();
        for j in 0..20 {
            let rho = critical * (1.0 + 0.01 + 3.0 * j as f64 / 19.0);
            let root = nu_star(rho, mu1).unwrap();
            assert!(root > 0.0 && root < mu1);
            assert!((1.0 + rho * ln_g(root, mu1).unwrap()).abs() <= 1e-10);
        }
    }
}

#[test]
fn regime_cases_follow_discriminant() {
    let p = config_a();
    for i in 1..200 {
        let rho = i as f64 * 0.05;
        let r = classify_regime(rho, &p).unwrap();
        match r.case {
            Case::CaseOne => assert!(r.discriminant > 0.0 && r.nu_star.is_none()),
            Case::CaseTwo => {
                let nu = r.nu_star.unwrap();
                assert!(r.discriminant < 0.0 && nu > 0.0 && nu < 0.5);
            }
            Case::Boundary => assert!(r.discriminant.abs() <= 1e-12),
        }
        let expected = if r.threshold_value > 0.0 { PredictedLimit::One } else { PredictedLimit::Zero };
        assert_eq!(r.predicted_limit, expected);
    }
}

#[test]
fn lemma_a_trends_toward_predicted_side() {
    let p = config_a();
    let grid = [1_000, 10_000, 100_000, 1_000_000];
    for (nu, rho) in [(0.0, 0.5), (0.0, 3.0), (0.3, 0.6), (0.3, 4.0), (0.6, 2.5)] {
        let s = ScalingSpec::new(rho).unwrap();
        let sign = threshold_at(nu, rho, &p);
        let values: Vec<f64> = grid.iter().map(|&n| finite_n_lemma_a(nu, n, &s, &p).unwrap()).collect();
        // Positive exponent: every node at this level has a neighbour, the term goes to 0.
        if sign > 0.0 {
            assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{values:?}");
            assert!(values[3] < 0.5);
        } else {
            assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{values:?}");
            assert!(values[3] > 0.5);
        }
    }
}

#[test]
fn stirling_error_shrinks_with_levels() {
    let pmf = AttributePmf::new(0.5).unwrap();
    let errs: Vec<f64> = [200, 400, 800, 1600]
        .iter()
        .map(|&l| stirling_at_levels(1_000_000, l, 0.3, &pmf).unwrap().relative_error())
        .collect();
    assert!(errs[0] <= 0.01);
    assert!(errs.windows(2).all(|w| w[1] <= w[0]));
}
