mod common;

use common::{columns, dataset};
use proptest::prelude::*;
use takeup_core::estimator::{fit, loglik_pooled, loglik_re, rho_from_sigma, Dataset, FitOptions, ModelKind, RandomEffectsIntegrator};

fn arb_data() -> impl Strategy<Value = Dataset> {
    (
        proptest::collection::vec(-2.0f64..2.0, 60),
        proptest::collection::vec(any::<bool>(), 40),
        proptest::collection::vec(0.2f64..3.0, 10),
    )
        .prop_map(|(x, y, w)| {
            // Weights constant within a household, as survey weights are.
            let w: Vec<f64> = w.iter().flat_map(|v| [*v; 4]).collect();
            dataset(10, 4, 3, &x, &y, &w)
        })
}

fn fd_check(analytic: &[f64], f: impl Fn(usize, f64) -> f64) -> Result<(), String> {
    for (j, g) in analytic.iter().enumerate() {
        let h = 1e-5;
        let num = (f(j, h) - f(j, -h)) / (2.0 * h);
        let rel = (g - num).abs() / g.abs().max(1.0);
        if rel >= 1e-6 {
            return Err(format!("component {j}: analytic {g}, numeric {num}"));
        }
    }
    Ok(())
}

fn bump(v: &[f64], j: usize, h: f64) -> Vec<f64> {
    let mut v = v.to_vec();
    v[j] += h;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pooled_gradient_matches_differences(data in arb_data(), beta in proptest::collection::vec(-1.5f64..1.5, 3)) {
        let g = loglik_pooled(&data, &beta).unwrap().gradient;
        let r = fd_check(&g, |j, h| loglik_pooled(&data, &bump(&beta, j, h)).unwrap().loglik);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn re_gradient_matches_differences(data in arb_data(), beta in proptest::collection::vec(-1.5f64..1.5, 3), sigma in 0.05f64..2.5) {
        let integ = RandomEffectsIntegrator::new(32, false).unwrap();
        let g = loglik_re(&data, &beta, sigma, &integ).unwrap().gradient;
        let mut theta = beta.clone();
        theta.push(sigma);
        let r = fd_check(&g, |j, h| {
            let t = bump(&theta, j, h);
            loglik_re(&data, &t[..3], t[3], &integ).unwrap().loglik
        });
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn adaptive_quadrature_converges_for_moderate_sigma(
        data in arb_data(),
        beta in proptest::collection::vec(-2.5f64..2.5, 3),
        sigma in 0.0f64..1.0,
    ) {
        let l = |n| loglik_re(&data, &beta, sigma, &RandomEffectsIntegrator::new(n, true).unwrap()).unwrap().loglik;
        let (a, b) = (l(30), l(50));
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn re_at_zero_sigma_is_pooled(data in arb_data(), beta in proptest::collection::vec(-3.0f64..3.0, 3)) {
        let integ = RandomEffectsIntegrator::new(32, false).unwrap();
        let re = loglik_re(&data, &beta, 0.0, &integ).unwrap().loglik;
        let pooled = loglik_pooled(&data, &beta).unwrap().loglik;
        prop_assert!((re - pooled).abs() <= 1e-12 * pooled.abs().max(1.0), "{re} vs {pooled}");
    }
}

fn fitted_data(shift: f64, weight: f64) -> Dataset {
    // Deterministic, non-separated panel with a household component.
    let mut rows = Vec::new();
    for h in 0..120u64 {
        let u = ((h * 37 % 101) as f64 / 101.0 - 0.5) * 1.6;
        for t in 0..4 {
            let x1 = ((h * 13 + t * 7) % 17) as f64 / 8.0 - 1.0;
            let x2 = ((h * 5 + t * 11) % 9) as f64 / 4.0 - 1.0;
            let e = (((h * 31 + t * 17) % 23) as f64 / 23.0 - 0.5) * 2.4;
            let y = 0.2 + 0.8 * x1 - 0.5 * x2 + u + e > 0.0;
            rows.push((h, 2010 + t as i32, y, vec![1.0, x1 + shift, x2], weight));
        }
    }
    Dataset::new(columns(3), rows).unwrap()
}

fn opts(kind: ModelKind) -> FitOptions {
    FitOptions {
        kind,
        marginal_effects: false,
        ..FitOptions::default()
    }
}

#[test]
fn shifting_a_covariate_leaves_the_maximum_unchanged() {
    for kind in [ModelKind::Pooled, ModelKind::RandomEffects] {
        let a = fit(&fitted_data(0.0, 1.0), "a", &opts(kind)).unwrap();
        let b = fit(&fitted_data(3.0, 1.0), "b", &opts(kind)).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-8, "{kind:?}: {} vs {}", a.loglik, b.loglik);
        let slope = |r: &takeup_core::estimator::EstimationResult| r.coefficients[1].estimate;
        assert!((slope(&a) - slope(&b)).abs() < 1e-6);
    }
}

#[test]
fn constant_weights_reproduce_unweighted_estimates() {
    for kind in [ModelKind::Pooled, ModelKind::RandomEffects] {
        let a = fit(&fitted_data(0.0, 1.0), "a", &opts(kind)).unwrap();
        let b = fit(&fitted_data(0.0, 2.5), "b", &opts(kind)).unwrap();
        for (x, y) in a.params().iter().zip(b.params()) {
            assert!((x - y).abs() < 1e-8, "{kind:?}: {x} vs {y}");
        }
        assert!((2.5 * a.loglik - b.loglik).abs() < 1e-8 * b.loglik.abs());
    }
}

#[test]
fn rho_mapping_is_exact() {
    assert_eq!(rho_from_sigma(0.0), 0.0);
    assert_eq!(rho_from_sigma(1.0), 0.5);
    assert!((rho_from_sigma(3f64.sqrt()) - 0.75).abs() < 1e-15);
}
