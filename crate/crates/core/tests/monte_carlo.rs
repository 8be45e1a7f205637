//! Seeded Monte Carlo checks of the large-sample statements behind the
//! estimators, kept to a few seconds each.

use arcd_core::ar::{fit, omega_p2, simulate, ArParams};
use arcd_core::bayes::{flat_prior_posterior_from_fit, Variance};
use arcd_core::implied_prior::{rest_term_h_p1, ImpliedPrior};
use arcd_core::methods::{default_window, method_surface, region_at, MethodSettings};
use arcd_core::grid::Method;
use arcd_core::rng::ArRng;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn standardized_estimates_are_near_standard_normal() {
    let params = ArParams::new(vec![0.0, 0.0], 1.0).unwrap();
    let n = 400;
    let (mut z1, mut z2) = (Vec::new(), Vec::new());
    for seed in 0..2000 {
        let f = fit(&simulate(&params, n, seed).unwrap(), 2).unwrap();
        // Omega at the truth is the identity, so the marginals are sqrt(n) phi_hat
        let o = omega_p2([0.0, 0.0]).omega;
        assert_eq!(o[(0, 1)], 0.0);
        z1.push((n as f64).sqrt() * f.phi_hat[0]);
        z2.push((n as f64).sqrt() * f.phi_hat[1]);
    }
    for z in [&z1, &z2] {
        assert!(mean(z).abs() <= 0.07, "mean {}", mean(z));
        assert!((0.85..=1.15).contains(&var(z)), "variance {}", var(z));
    }
}

#[test]
fn b_over_n_sigma2_concentrates() {
    let params = ArParams::new(vec![0.4, 0.2], 1.0).unwrap();
    let n = 1600;
    let close = (0..200)
        .filter(|&seed| {
            let f = fit(&simulate(&params, n, 900 + seed).unwrap(), 2).unwrap();
            let b = ImpliedPrior::from_fit(&f, 1.0).unwrap().b_statistic(&[0.4, 0.2]);
            (b / n as f64 + 1.0).abs() <= 0.15
        })
        .count();
    assert!(close >= 180, "{close}/200 within 0.15");
}

fn mean_abs_residual(n: usize, seeds: u64) -> f64 {
    let params = ArParams::new(vec![0.0, 0.0], 1.0).unwrap();
    let values: Vec<f64> = (0..seeds)
        .map(|seed| {
            let f = fit(&simulate(&params, n, 5000 + seed).unwrap(), 2).unwrap();
            ImpliedPrior::from_fit(&f, 1.0).unwrap().residual(&[0.0, 0.0]).abs()
        })
        .collect();
    mean(&values)
}

#[test]
fn residual_shrinks_with_n() {
    let small = mean_abs_residual(200, 200);
    let large = mean_abs_residual(800, 100);
    assert!(large < small);
    let ratio = small / large;
    assert!((1.5..=8.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn ml_variance_changes_residual_less_at_larger_n() {
    let params = ArParams::new(vec![0.0, 0.0], 1.0).unwrap();
    let gap = |n: usize| {
        let d: Vec<f64> = (0..100)
            .map(|seed| {
                let f = fit(&simulate(&params, n, 7000 + seed).unwrap(), 2).unwrap();
                let with_true = ImpliedPrior::from_fit(&f, 1.0).unwrap().residual(&[0.0, 0.0]);
                let with_ml = ImpliedPrior::from_fit(&f, f.sigma2_hat).unwrap().residual(&[0.0, 0.0]);
                (with_true - with_ml).abs()
            })
            .collect();
        mean(&d)
    };
    assert!(gap(800) <= gap(200));
}

#[test]
fn ar1_rest_term_has_mean_zero() {
    let phi = 0.5;
    let n = 3200;
    let params = ArParams::new(vec![phi], 1.0).unwrap();
    let scaled: Vec<f64> = (0..500)
        .map(|seed| {
            let f = fit(&simulate(&params, n, 11_000 + seed).unwrap(), 1).unwrap();
            (n as f64).sqrt() * ImpliedPrior::from_fit(&f, 1.0).unwrap().residual(&[phi])
        })
        .collect();
    let se = (var(&scaled) / 500.0).sqrt();
    assert!(mean(&scaled).abs() <= 3.0 * se, "mean {} se {}", mean(&scaled), se);
    // the spread is of the order of the printed rest term
    let h = rest_term_h_p1(phi, phi).unwrap();
    assert!(var(&scaled).sqrt() >= 0.5 * h.abs());
}

#[test]
fn bayes_region_usually_contains_the_wald_region_near_the_boundary() {
    let params = ArParams::new(vec![0.45, 0.25], 1.0).unwrap();
    let mut near = 0;
    let mut containing = 0;
    let mut seed = 0;
    while near < 40 {
        let f = fit(&simulate(&params, 45, 300 + seed).unwrap(), 2).unwrap();
        seed += 1;
        // estimates near the unit-root line
        if f.phi_hat[0] + f.phi_hat[1] < 0.6 || f.phi_hat[0] + f.phi_hat[1] >= 1.0 {
            continue;
        }
        near += 1;
        let g = default_window(&f, 5.0, 100).unwrap();
        let post = flat_prior_posterior_from_fit(&f, &g, Variance::Profile).unwrap();
        let bayes = region_at(&post, 0.95).unwrap();
        let curve = method_surface(&f, Method::WaldAsymptotic, &g, &MethodSettings::default(), &ArRng::new(0)).unwrap();
        let wald = region_at(&curve, 0.95).unwrap();
        if wald.is_subset_of(&bayes) {
            containing += 1;
        }
    }
    assert!(containing * 10 >= near * 9, "{containing}/{near}");
}
