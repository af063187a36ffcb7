//! Worked examples that need an independent oracle or a small Monte Carlo.

mod common;

use common::dataset;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use takeup_core::estimator::{
    fit, loglik_re, marginal_effects, Block, Dataset, DesignLayout, FitOptions, ModelKind, ModelSpec,
    RandomEffectsIntegrator,
};
use takeup_core::metrics::{ntr, rate_table, sim_quality, Grouping, MetricsRow, Receipt};
use takeup_core::pipeline::build_metrics_rows;
use takeup_core::selection::{apply_cascade, Filter, SelectionConfig};
use takeup_core::synthgen::{generate, replicate, replication_seed, SyntheticDgp};

fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

fn oracle_loglik(data: &Dataset, beta: &[f64], sigma: f64) -> f64 {
    let mut total = 0.0;
    for g in &data.groups {
        let z: Vec<(f64, f64)> = g
            .clone()
            .map(|i| {
                let xb: f64 = data.row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
                (xb, if data.y[i] { 1.0 } else { -1.0 })
            })
            .collect();
        let f = |v: f64| {
            let dens = (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
            z.iter().map(|(xb, q)| phi_cdf(q * (xb + sigma * v))).product::<f64>() * dens
        };
        total += data.group_weight(g) * adaptive_simpson(&f, -12.0, 12.0, 1e-14).ln();
    }
    total
}

#[test]
fn random_effects_quadrature_matches_direct_integration() {
    let x = [0.3, -1.2, 0.8, 0.1, -0.4, 1.5, -0.9, 0.6, 0.2, -0.1, 1.1, -1.6, 0.45, -0.7, 0.9];
    let y = [true, false, true, true, false, false, true, false, true, true, false, true, false, false, true];
    let data = dataset(5, 3, 2, &x, &y, &[1.0]);
    let beta = [0.2, 0.7];
    for sigma in [0.3, 0.8] {
        let integ = RandomEffectsIntegrator::new(32, true).unwrap();
        let got = loglik_re(&data, &beta, sigma, &integ).unwrap().loglik;
        let want = oracle_loglik(&data, &beta, sigma);
        assert!((got - want).abs() < 1e-8, "sigma {sigma}: {got} vs {want}");
    }
}

fn reduced(blocks: &[Block]) -> ModelSpec {
    ModelSpec::new(blocks.iter().copied())
}

fn sample(dgp: &SyntheticDgp, spec: &ModelSpec) -> Dataset {
    let panel = generate(dgp).unwrap();
    let obs = panel.estimation_sample().unwrap();
    Dataset::from_observations(&obs, &DesignLayout::new(spec, dgp.wave_years()), false).unwrap()
}

#[test]
fn delta_method_widths_match_parameter_bootstrap() {
    let dgp = SyntheticDgp { households: 1500, sigma_nu: 0.0, ..Default::default() };
    let data = sample(&dgp, &reduced(&[Block::IncomeGap, Block::FemaleHead, Block::East, Block::HomeOwner]));
    let opts = FitOptions { kind: ModelKind::Pooled, ..FitOptions::default() };
    let r = fit(&data, "pooled", &opts).unwrap();
    let k = r.n_params();
    let chol = DMatrix::from_row_slice(k, k, &r.covariance).cholesky().unwrap();
    let mean = DVector::from_vec(r.params());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 1000;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(draws); r.marginal_effects.len()];
    for _ in 0..draws {
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let theta = &mean + chol.l() * z;
        let mut b = r.clone();
        for (c, v) in b.coefficients.iter_mut().zip(theta.iter()) {
            c.estimate = *v;
        }
        for (s, e) in samples.iter_mut().zip(marginal_effects(&b, &data).unwrap()) {
            s.push(e.estimate);
        }
    }
    for (e, s) in r.marginal_effects.iter().zip(&samples) {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let sd = (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt();
        let rel = (e.std_error - sd).abs() / sd;
        assert!(rel < 0.15, "{}: delta {} vs bootstrap {}", e.name, e.std_error, sd);
    }
}

#[test]
fn no_household_effect_gives_small_rho() {
    let dgp = SyntheticDgp { households: 5000, sigma_nu: 0.0, seed: 5, ..Default::default() };
    let data = sample(&dgp, &reduced(&[Block::IncomeGap, Block::FemaleHead, Block::East, Block::HomeOwner]));
    let opts = FitOptions { marginal_effects: false, ..FitOptions::default() };
    let r = fit(&data, "re", &opts).unwrap();
    let rho = r.rho.unwrap().estimate;
    assert!(rho < 0.05, "rho {rho}");
}

#[test]
fn irrelevant_history_is_insignificant_at_nominal_rate() {
    let spec = reduced(&[Block::IncomeGap, Block::FemaleHead, Block::East, Block::HomeOwner, Block::ReceiptShares]);
    let base = SyntheticDgp { households: 500, history_nu_loading: 0.0, ..Default::default() };
    let opts = FitOptions { marginal_effects: false, ..FitOptions::default() };
    let names = ["receipt_share_lag1", "receipt_share_lag2", "receipt_share_lag3"];
    let (mut tests, mut rejections) = (0, 0);
    for r in 0..40 {
        let dgp = SyntheticDgp { seed: replication_seed(base.seed, r), ..base.clone() };
        let fitted = fit(&sample(&dgp, &spec), "m1", &opts).unwrap();
        for n in names {
            tests += 1;
            rejections += usize::from(fitted.coefficient(n).unwrap().p_value < 0.05);
        }
    }
    let rate = rejections as f64 / tests as f64;
    // Nominal 5 %; 120 tests give a binomial SD of about 2 pp.
    assert!(rate <= 0.10, "rejection rate {rate}");
}

#[test]
fn single_replication_is_one_fit() {
    let dgp = SyntheticDgp { households: 300, ..Default::default() };
    let spec = reduced(&[Block::IncomeGap, Block::FemaleHead]);
    let opts = FitOptions { marginal_effects: false, ..FitOptions::default() };
    let s = replicate(&dgp, 1, &spec, &opts, false).unwrap();
    let direct = fit(
        &sample(&SyntheticDgp { seed: replication_seed(dgp.seed, 0), ..dgp.clone() }, &spec),
        "direct",
        &opts,
    )
    .unwrap();
    for (p, c) in s.parameters.iter().zip(&direct.coefficients) {
        assert_eq!(p.name, c.name);
        assert_eq!(p.mean, c.estimate);
        assert_eq!(p.replications, 1);
    }
}

fn metrics_rows(dgp: &SyntheticDgp) -> Vec<MetricsRow> {
    let panel = generate(dgp).unwrap();
    let ents = takeup_core::rules::simulate_population(&panel.snapshots, &panel.policies).unwrap();
    let map = ents.iter().map(|e| ((e.household_id, e.wave_year), e.clone())).collect();
    let out = apply_cascade(&panel.snapshots, &map, &panel.linked, &SelectionConfig::default()).unwrap();
    let keep = out.passes_all_except(&[Filter::SimulatedIneligible]);
    let base: Vec<_> = panel.snapshots.iter().zip(keep).filter(|(_, k)| *k).map(|(h, _)| h.clone()).collect();
    build_metrics_rows(&base, &ents, &panel.policies).unwrap()
}

#[test]
fn net_underreporting_makes_the_correction_negative() {
    let dgp = SyntheticDgp { households: 800, underreport_rate: 0.25, overreport_rate: 0.02, ..Default::default() };
    let rows = metrics_rows(&dgp);
    let total = rate_table(&rows, Grouping::Total, false).rows.remove(0);
    assert!(total.difference_pp.unwrap() < 0.0, "{total:?}");
    assert!(ntr(&rows, Receipt::Administrative, false).unwrap() < ntr(&rows, Receipt::Reported, false).unwrap());
}

#[test]
fn quality_cross_tab_matches_enumeration() {
    let dgp = SyntheticDgp { households: 8, waves: 3, ineligible_receipt_rate: 0.3, ..Default::default() };
    let rows: Vec<MetricsRow> = metrics_rows(&dgp).into_iter().take(20).collect();
    let q = sim_quality(&rows, false);
    for cell in &q.cells {
        let n = rows.iter().filter(|r| r.eligible == cell.eligible && r.admin_receipt == cell.receipt).count();
        assert_eq!(cell.n, n);
        if n == 0 {
            assert!(cell.reported.is_none() && cell.simulated.is_none());
        }
    }
    assert_eq!(q.cells.iter().map(|c| c.n).sum::<usize>(), rows.len());
}
