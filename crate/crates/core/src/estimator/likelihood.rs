//! Pooled and random-effects probit log-likelihoods with analytic
//! gradients.
//!
//! Both are sums over households. Households are split into fixed chunks
//! that are evaluated in parallel and reduced in chunk order, so a value
//! does not depend on the number of worker threads.

use rayon::prelude::*;

use super::design::Dataset;
use super::normal;
use super::quadrature::GaussHermite;
use crate::error::{Error, Result};

const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    /// With respect to the coefficients, followed by `sigma_nu` for the
    /// random-effects likelihood.
    pub gradient: Vec<f64>,
}

#[inline]
fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn reduce(parts: Vec<(f64, Vec<f64>)>, len: usize) -> Evaluation {
    let mut loglik = 0.0;
    let mut gradient = vec![0.0; len];
    for (l, g) in parts {
        loglik += l;
        for (acc, v) in gradient.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Evaluation { loglik, gradient }
}

fn check(data: &Dataset, beta: &[f64]) -> Result<()> {
    if beta.len() != data.width() {
        return Err(Error::InputValidation(format!(
            "{} coefficients for {} columns",
            beta.len(),
            data.width()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain("non-finite coefficient".into()));
    }
    Ok(())
}

fn finite(e: Evaluation) -> Result<Evaluation> {
    if e.loglik.is_finite() && e.gradient.iter().all(|g| g.is_finite()) {
        Ok(e)
    } else {
        Err(Error::Domain("log-likelihood is not finite".into()))
    }
}

/// `sum_i w_i ln Phi(q_i x_i'beta)` with `q_i = 2 y_i - 1`.
pub fn loglik_pooled(data: &Dataset, beta: &[f64]) -> Result<Evaluation> {
    check(data, beta)?;
    let p = data.width();
    let parts: Vec<(f64, Vec<f64>)> = data
        .groups
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut ll = 0.0;
            let mut grad = vec![0.0; p];
            for g in chunk {
                for i in g.clone() {
                    let x = data.row(i);
                    let q = sign(data.y[i]);
                    let w = data.weights[i];
                    let (lc, lambda) = normal::ln_cdf_and_mills(q * dot(x, beta));
                    ll += w * lc;
                    let s = w * q * lambda;
                    for (acc, xv) in grad.iter_mut().zip(x) {
                        *acc += s * xv;
                    }
                }
            }
            (ll, grad)
        })
        .collect();
    finite(reduce(parts, p))
}

/// Per-observation scores of the pooled likelihood, summed by household.
pub fn pooled_household_scores(data: &Dataset, beta: &[f64]) -> Vec<Vec<f64>> {
    let p = data.width();
    data.groups
        .iter()
        .map(|g| {
            let mut s = vec![0.0; p];
            for i in g.clone() {
                let x = data.row(i);
                let q = sign(data.y[i]);
                let c = data.weights[i] * q * normal::inverse_mills(q * dot(x, beta));
                for (acc, xv) in s.iter_mut().zip(x) {
                    *acc += c * xv;
                }
            }
            s
        })
        .collect()
}

/// Gauss-Hermite integration of the household random intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomEffectsIntegrator {
    pub rule: GaussHermite,
    /// Re-center and re-scale the nodes at each household's posterior mode.
    pub adaptive: bool,
}

impl RandomEffectsIntegrator {
    pub fn new(nodes: usize, adaptive: bool) -> Result<Self> {
        Ok(RandomEffectsIntegrator {
            rule: GaussHermite::new(nodes)?,
            adaptive,
        })
    }
}

struct Scratch {
    z: Vec<f64>,
    log_terms: Vec<f64>,
    node_grads: Vec<f64>,
}

/// Mode and curvature scale of `sum_t ln Phi(q_t (z_t + sigma v)) - v^2/2`.
fn posterior_mode(z: &[f64], q: &[f64], sigma: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut curv = -1.0;
    for _ in 0..50 {
        let mut d1 = -v;
        let mut d2 = -1.0;
        for (zt, qt) in z.iter().zip(q) {
            let u = qt * (zt + sigma * v);
            let lambda = normal::inverse_mills(u);
            d1 += qt * sigma * lambda;
            d2 -= sigma * sigma * lambda * (u + lambda);
        }
        curv = d2;
        let step = d1 / d2;
        v -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    (v, 1.0 / (-curv).sqrt())
}

#[allow(clippy::too_many_arguments)]
fn household_term(
    data: &Dataset,
    g: std::ops::Range<usize>,
    beta: &[f64],
    sigma: f64,
    integ: &RandomEffectsIntegrator,
    scratch: &mut Scratch,
    ll: &mut f64,
    grad: &mut [f64],
) {
    let p = data.width();
    let k_nodes = integ.rule.len();
    scratch.z.clear();
    let mut qs = Vec::with_capacity(g.len());
    for i in g.clone() {
        scratch.z.push(dot(data.row(i), beta));
        qs.push(sign(data.y[i]));
    }
    let (center, scale) = if integ.adaptive && sigma > 0.0 {
        posterior_mode(&scratch.z, &qs, sigma)
    } else {
        (0.0, 1.0)
    };
    scratch.log_terms.clear();
    scratch.node_grads.clear();
    scratch.node_grads.resize(k_nodes * (p + 1), 0.0);
    for k in 0..k_nodes {
        let base = integ.rule.nodes[k];
        let v = center + scale * base;
        let mut a = integ.rule.ln_weights[k];
        if integ.adaptive {
            a += scale.ln() + 0.5 * base * base - 0.5 * v * v;
        }
        let ng = &mut scratch.node_grads[k * (p + 1)..(k + 1) * (p + 1)];
        for (t, i) in g.clone().enumerate() {
            let q = qs[t];
            let (lc, lambda) = normal::ln_cdf_and_mills(q * (scratch.z[t] + sigma * v));
            a += lc;
            let s = q * lambda;
            for (acc, xv) in ng[..p].iter_mut().zip(data.row(i)) {
                *acc += s * xv;
            }
            ng[p] += s * v;
        }
        scratch.log_terms.push(a);
    }
    let m = scratch.log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scratch.log_terms.iter().map(|a| (a - m).exp()).sum();
    let ln_l = m + sum.ln();
    let w = data.group_weight(&g);
    *ll += w * ln_l;
    for k in 0..k_nodes {
        let pk = w * (scratch.log_terms[k] - ln_l).exp();
        if pk == 0.0 {
            continue;
        }
        let ng = &scratch.node_grads[k * (p + 1)..(k + 1) * (p + 1)];
        for (acc, v) in grad.iter_mut().zip(ng) {
            *acc += pk * v;
        }
    }
}

/// `sum_i w_i ln E_v[prod_t Phi(q_it (x_it'beta + sigma v))]` with the
/// expectation over a standard normal `v`. The household weight is the mean
/// of its observation weights.
pub fn loglik_re(
    data: &Dataset,
    beta: &[f64],
    sigma: f64,
    integ: &RandomEffectsIntegrator,
) -> Result<Evaluation> {
    check(data, beta)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma_nu must be non-negative, got {sigma}")));
    }
    let p = data.width();
    let parts: Vec<(f64, Vec<f64>)> = data
        .groups
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut scratch = Scratch {
                z: Vec::new(),
                log_terms: Vec::with_capacity(integ.rule.len()),
                node_grads: Vec::new(),
            };
            let mut ll = 0.0;
            let mut grad = vec![0.0; p + 1];
            for g in chunk {
                household_term(data, g.clone(), beta, sigma, integ, &mut scratch, &mut ll, &mut grad);
            }
            (ll, grad)
        })
        .collect();
    finite(reduce(parts, p + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::design::{Column, ColumnRole};

    fn cols(p: usize) -> Vec<Column> {
        (0..p)
            .map(|j| Column {
                name: format!("x{j}"),
                role: if j == 0 { ColumnRole::Intercept } else { ColumnRole::Continuous },
            })
            .collect()
    }

    #[test]
    fn single_observation_at_zero() {
        let d = Dataset::new(cols(1), vec![(1, 2020, true, vec![1.0], 1.0)]).unwrap();
        let e = loglik_pooled(&d, &[0.0]).unwrap();
        assert_eq!(e.loglik, 0.5f64.ln());
        let integ = RandomEffectsIntegrator::new(32, false).unwrap();
        for sigma in [0.0, 0.5, 2.0] {
            let e = loglik_re(&d, &[0.0], sigma, &integ).unwrap();
            assert!((e.loglik - 0.5f64.ln()).abs() < 1e-14, "sigma {sigma}");
        }
    }

    #[test]
    fn saturated_fit_approaches_zero_from_below() {
        let d = Dataset::new(cols(1), vec![(1, 2020, true, vec![1.0], 1.0)]).unwrap();
        let mut last = f64::NEG_INFINITY;
        for b in [1.0, 3.0, 6.0, 9.0] {
            let l = loglik_pooled(&d, &[b]).unwrap().loglik;
            assert!(l < 0.0 && l > last);
            last = l;
        }
    }

    #[test]
    fn wrong_length_and_negative_sigma() {
        let d = Dataset::new(cols(1), vec![(1, 2020, true, vec![1.0], 1.0)]).unwrap();
        assert!(loglik_pooled(&d, &[0.0, 1.0]).is_err());
        let integ = RandomEffectsIntegrator::new(8, false).unwrap();
        assert!(matches!(loglik_re(&d, &[0.0], -0.1, &integ), Err(Error::Domain(_))));
    }

    #[test]
    fn adaptive_agrees_with_plain_rule() {
        let rows = (0..40)
            .map(|i| {
                let x = ((i * 7) % 11) as f64 / 5.0 - 1.0;
                ((i / 4) as u64, 2000 + i % 4, (i * 3) % 5 < 3, vec![1.0, x], 1.0)
            })
            .collect();
        let d = Dataset::new(cols(2), rows).unwrap();
        let plain = RandomEffectsIntegrator::new(60, false).unwrap();
        let adaptive = RandomEffectsIntegrator::new(20, true).unwrap();
        let a = loglik_re(&d, &[0.2, -0.4], 1.3, &plain).unwrap().loglik;
        let b = loglik_re(&d, &[0.2, -0.4], 1.3, &adaptive).unwrap().loglik;
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}
