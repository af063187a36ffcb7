use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::design::{Column, Dataset, DesignLayout, ModelTag, PanelObservation};
use super::effects::{marginal_effects, MarginalEffect};
use super::likelihood::{loglik_pooled, loglik_re, pooled_household_scores, RandomEffectsIntegrator};
use super::normal;
use super::optimize::{max_norm, maximize, BfgsOptions, StopReason};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Pooled,
    RandomEffects,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub kind: ModelKind,
    pub nodes: usize,
    pub adaptive: bool,
    pub bfgs: BfgsOptions,
    /// Household-clustered sandwich covariance (pooled model only).
    pub cluster_robust: bool,
    pub marginal_effects: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            kind: ModelKind::RandomEffects,
            nodes: 32,
            adaptive: false,
            bfgs: BfgsOptions::default(),
            cluster_robust: false,
            marginal_effects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub newton_steps: usize,
    pub gradient_max_norm: f64,
    pub stop: String,
    /// False when the Hessian at the optimum is not negative definite; the
    /// standard errors are then unreliable.
    pub hessian_negative_definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub label: String,
    pub kind: ModelKind,
    pub columns: Vec<Column>,
    pub coefficients: Vec<Coefficient>,
    /// `ln sigma_nu`, the parameter actually optimized.
    pub ln_sigma_nu: Option<ParamEstimate>,
    pub sigma_nu: Option<ParamEstimate>,
    pub rho: Option<ParamEstimate>,
    pub loglik: f64,
    pub n_obs: usize,
    pub n_households: usize,
    pub nodes: Option<usize>,
    pub adaptive: bool,
    pub cluster_robust: bool,
    /// Row-major covariance of `(beta, ln sigma_nu)`.
    pub covariance: Vec<f64>,
    pub convergence: ConvergenceReport,
    pub marginal_effects: Vec<MarginalEffect>,
}

impl EstimationResult {
    /// Coefficients followed by `ln sigma_nu` for random-effects models.
    pub fn params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.coefficients.iter().map(|c| c.estimate).collect();
        if let Some(ls) = self.ln_sigma_nu {
            p.push(ls.estimate);
        }
        p
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len() + usize::from(self.ln_sigma_nu.is_some())
    }

    pub fn coefficient(&self, name: &str) -> Result<&Coefficient> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Lookup(name.to_string()))
    }

    pub fn effect(&self, name: &str) -> Result<&MarginalEffect> {
        self.marginal_effects
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Lookup(name.to_string()))
    }

    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.n_params() + j]
    }
}

/// Share of latent variance due to the household effect.
pub fn rho_from_sigma(sigma_nu: f64) -> f64 {
    let s2 = sigma_nu * sigma_nu;
    s2 / (s2 + 1.0)
}

fn objective(
    data: &Dataset,
    kind: ModelKind,
    integ: &RandomEffectsIntegrator,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match kind {
        ModelKind::Pooled => loglik_pooled(data, params).map(|e| (e.loglik, e.gradient)),
        ModelKind::RandomEffects => {
            let p = data.width();
            let sigma = params[p].exp();
            let mut e = loglik_re(data, &params[..p], sigma, integ)?;
            e.gradient[p] *= sigma;
            Ok((e.loglik, e.gradient))
        }
    }
}

/// Central differences of the analytic gradient, symmetrized.
fn numerical_hessian<F>(f: &mut F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let k = x.len();
    let mut h = DMatrix::zeros(k, k);
    let mut xp = x.to_vec();
    for i in 0..k {
        let step = 1e-5 * x[i].abs().max(1.0);
        xp[i] = x[i] + step;
        let (_, gp) = f(&xp)?;
        xp[i] = x[i] - step;
        let (_, gm) = f(&xp)?;
        xp[i] = x[i];
        for j in 0..k {
            h[(i, j)] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// `(-H)^{-1}` when `-H` is positive definite.
fn information_inverse(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (-h).cholesky().map(|c| c.inverse())
}

fn check_separation(data: &Dataset, beta: &[f64], scale: f64) -> Result<()> {
    let perfect = (0..data.n_obs()).all(|i| {
        let z: f64 = data.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
        let q = if data.y[i] { 1.0 } else { -1.0 };
        normal::ln_cdf(q * z / scale) > -1e-6
    });
    if perfect {
        return Err(Error::NonConvergence {
            iterations: 0,
            reason: "outcomes perfectly predicted (separation)".into(),
            trajectory: Vec::new(),
        });
    }
    Ok(())
}

fn fit_kind(
    data: &Dataset,
    kind: ModelKind,
    start: Vec<f64>,
    integ: &RandomEffectsIntegrator,
    opts: &FitOptions,
) -> Result<(Vec<f64>, f64, Vec<f64>, DMatrix<f64>, ConvergenceReport)> {
    let p = data.width();
    let mut f = |x: &[f64]| objective(data, kind, integ, x);
    let bfgs = BfgsOptions {
        tracked_params: p,
        ..opts.bfgs.clone()
    };
    let ascent = maximize(&mut f, start, &bfgs)?;
    let mut x = ascent.x;
    let mut value = ascent.value;
    let mut grad = ascent.gradient;
    let mut hessian = numerical_hessian(&mut f, &x)?;
    let mut newton_steps = 0;
    while max_norm(&grad) >= opts.bfgs.gtol && newton_steps < 8 {
        let Some(cov) = information_inverse(&hessian) else { break };
        let g = nalgebra::DVector::from_column_slice(&grad);
        let step = &cov * g;
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let Ok((ft, gt)) = f(&trial) else { break };
        if !(ft >= value - 1e-10 * value.abs().max(1.0)) || max_norm(&gt) >= max_norm(&grad) {
            break;
        }
        x = trial;
        value = ft;
        grad = gt;
        newton_steps += 1;
    }
    if newton_steps > 0 {
        hessian = numerical_hessian(&mut f, &x)?;
    }
    let gnorm = max_norm(&grad);
    if ascent.stop == StopReason::LineSearchStalled && gnorm > 1e-4 * (data.n_obs() as f64).max(1.0) {
        return Err(Error::NonConvergence {
            iterations: ascent.iterations,
            reason: format!("line search stalled with gradient norm {gnorm:.3e}"),
            trajectory: ascent.trajectory,
        });
    }
    let report = ConvergenceReport {
        iterations: ascent.iterations,
        newton_steps,
        gradient_max_norm: gnorm,
        stop: match ascent.stop {
            StopReason::Gradient => "gradient",
            StopReason::RelativeChange => "relative_change",
            StopReason::LineSearchStalled => "line_search_stalled",
        }
        .to_string(),
        hessian_negative_definite: information_inverse(&hessian).is_some(),
    };
    Ok((x, value, grad, hessian, report))
}

/// Maximum-likelihood fit of a pooled or random-effects probit.
pub fn fit(data: &Dataset, label: &str, opts: &FitOptions) -> Result<EstimationResult> {
    let p = data.width();
    let integ = RandomEffectsIntegrator::new(opts.nodes, opts.adaptive)?;
    let (pooled_x, pooled_ll, _, pooled_h, pooled_report) =
        fit_kind(data, ModelKind::Pooled, vec![0.0; p], &integ, opts)?;
    check_separation(data, &pooled_x, 1.0)?;

    let (x, loglik, hessian, report) = match opts.kind {
        ModelKind::Pooled => (pooled_x, pooled_ll, pooled_h, pooled_report),
        ModelKind::RandomEffects => {
            let sigma0: f64 = 0.5;
            let mut start: Vec<f64> = pooled_x.iter().map(|b| b * (1.0 + sigma0 * sigma0).sqrt()).collect();
            start.push(sigma0.ln());
            let (x, ll, _, h, r) = fit_kind(data, ModelKind::RandomEffects, start, &integ, opts)?;
            (x, ll, h, r)
        }
    };

    let k = x.len();
    let mut cov = information_inverse(&hessian).unwrap_or_else(|| {
        (-&hessian)
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN))
    });
    let cluster_robust = opts.cluster_robust && opts.kind == ModelKind::Pooled;
    if cluster_robust {
        let mut meat = DMatrix::zeros(k, k);
        for s in pooled_household_scores(data, &x) {
            let v = nalgebra::DVector::from_vec(s);
            meat += &v * v.transpose();
        }
        cov = &cov * meat * &cov;
    }

    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let coefficients = data
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let s = se(j);
            let z = x[j] / s;
            Coefficient {
                name: c.name.clone(),
                estimate: x[j],
                std_error: s,
                z_value: z,
                p_value: normal::two_sided_p(z),
            }
        })
        .collect();
    let (ln_sigma_nu, sigma_nu, rho) = match opts.kind {
        ModelKind::Pooled => (None, None, None),
        ModelKind::RandomEffects => {
            let theta = x[p];
            let se_theta = se(p);
            let sigma = theta.exp();
            let s2 = sigma * sigma;
            (
                Some(ParamEstimate { estimate: theta, std_error: se_theta }),
                Some(ParamEstimate { estimate: sigma, std_error: sigma * se_theta }),
                Some(ParamEstimate {
                    estimate: rho_from_sigma(sigma),
                    std_error: 2.0 * s2 / ((1.0 + s2) * (1.0 + s2)) * se_theta,
                }),
            )
        }
    };

    let mut result = EstimationResult {
        label: label.to_string(),
        kind: opts.kind,
        columns: data.columns.clone(),
        coefficients,
        ln_sigma_nu,
        sigma_nu,
        rho,
        loglik,
        n_obs: data.n_obs(),
        n_households: data.groups.len(),
        nodes: (opts.kind == ModelKind::RandomEffects).then_some(opts.nodes),
        adaptive: opts.adaptive && opts.kind == ModelKind::RandomEffects,
        cluster_robust,
        covariance: (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| cov[(i, j)]).collect(),
        convergence: report,
        marginal_effects: Vec::new(),
    };
    if opts.marginal_effects {
        result.marginal_effects = marginal_effects(&result, data)?;
    }
    Ok(result)
}

/// Fits the four nested specifications. A failing model does not stop the
/// others.
pub fn model_suite(
    obs: &[PanelObservation],
    weighted: bool,
    opts: &FitOptions,
) -> Result<Vec<(ModelTag, Result<EstimationResult>)>> {
    if obs.is_empty() {
        return Err(Error::InputValidation("estimation sample is empty".into()));
    }
    let years: Vec<i32> = obs.iter().map(|o| o.wave_year).collect();
    Ok(ModelTag::ALL
        .iter()
        .map(|&tag| {
            let layout = DesignLayout::new(&tag.spec(), years.iter().copied());
            let res = Dataset::from_observations(obs, &layout, weighted)
                .and_then(|data| fit(&data, &tag.to_string(), opts));
            (tag, res)
        })
        .collect())
}
