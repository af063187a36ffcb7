//! Average marginal effects on the take-up probability, with the random
//! effect integrated out: `Pr(y=1|x) = Phi(x'beta / sqrt(1 + sigma^2))`.

use serde::{Deserialize, Serialize};

use super::design::{ColumnRole, Dataset};
use super::fit::{EstimationResult, ModelKind};
use super::normal::{self, Z_90, Z_95, Z_99};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectKind {
    /// Mean derivative of the probability.
    Derivative,
    /// Mean change from the block's reference category.
    DiscreteChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffect {
    pub name: String,
    pub kind: EffectKind,
    pub estimate: f64,
    pub std_error: f64,
    pub ci90: (f64, f64),
    pub ci95: (f64, f64),
    pub ci99: (f64, f64),
    /// Derivative of the estimate with respect to the model parameters.
    pub gradient: Vec<f64>,
}

impl MarginalEffect {
    fn new(name: String, kind: EffectKind, estimate: f64, gradient: Vec<f64>, cov: &[f64]) -> Self {
        let std_error = quadratic_form(&gradient, cov).max(0.0).sqrt();
        let ci = |z: f64| (estimate - z * std_error, estimate + z * std_error);
        MarginalEffect {
            name,
            kind,
            estimate,
            std_error,
            ci90: ci(Z_90),
            ci95: ci(Z_95),
            ci99: ci(Z_99),
            gradient,
        }
    }
}

fn quadratic_form(g: &[f64], cov: &[f64]) -> f64 {
    let k = g.len();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += g[i] * cov[i * k + j] * g[j];
        }
    }
    s
}

struct EffectDef {
    name: String,
    kind: EffectKind,
    column: usize,
    /// Columns of the one-hot block switched off for the reference level.
    block: Vec<usize>,
    /// Square term paired with the gap's linear term.
    square: Option<usize>,
}

fn effect_defs(data: &Dataset) -> Vec<EffectDef> {
    let square = data.columns.iter().position(|c| c.role == ColumnRole::GapSquare);
    data.columns
        .iter()
        .enumerate()
        .filter_map(|(j, c)| match &c.role {
            ColumnRole::Intercept | ColumnRole::GapSquare => None,
            ColumnRole::GapLinear => Some(EffectDef {
                name: c.name.clone(),
                kind: EffectKind::Derivative,
                column: j,
                block: Vec::new(),
                square,
            }),
            ColumnRole::Continuous => Some(EffectDef {
                name: c.name.clone(),
                kind: EffectKind::Derivative,
                column: j,
                block: Vec::new(),
                square: None,
            }),
            ColumnRole::Indicator { block } => Some(EffectDef {
                name: c.name.clone(),
                kind: EffectKind::DiscreteChange,
                column: j,
                block: data
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| matches!(&o.role, ColumnRole::Indicator { block: b } if b == block))
                    .map(|(k, _)| k)
                    .collect(),
                square: None,
            }),
        })
        .collect()
}

/// Average effects at a parameter vector `(beta[, ln sigma])`, weighted by
/// the dataset's observation weights.
fn effect_values(data: &Dataset, defs: &[EffectDef], params: &[f64], random_effects: bool) -> Vec<f64> {
    let p = data.width();
    let beta = &params[..p];
    let scale = if random_effects {
        let s = params[p].exp();
        (1.0 + s * s).sqrt()
    } else {
        1.0
    };
    let mut sums = vec![0.0; defs.len()];
    let mut total_w = 0.0;
    for i in 0..data.n_obs() {
        let x = data.row(i);
        let w = data.weights[i];
        total_w += w;
        let z: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        let dens = normal::pdf(z / scale) / scale;
        for (acc, d) in sums.iter_mut().zip(defs) {
            let v = match d.kind {
                EffectKind::Derivative => {
                    let mut slope = beta[d.column];
                    if let Some(sq) = d.square {
                        slope += 2.0 * beta[sq] * x[d.column];
                    }
                    dens * slope
                }
                EffectKind::DiscreteChange => {
                    let z0 = z - d.block.iter().map(|&k| beta[k] * x[k]).sum::<f64>();
                    normal::cdf((z0 + beta[d.column]) / scale) - normal::cdf(z0 / scale)
                }
            };
            *acc += w * v;
        }
    }
    sums.iter().map(|s| s / total_w).collect()
}

/// Average marginal effects of every regressor except the intercept, with
/// delta-method standard errors and 90/95/99 % intervals. The income gap's
/// effect differentiates its full quadratic.
pub fn marginal_effects(result: &EstimationResult, data: &Dataset) -> Result<Vec<MarginalEffect>> {
    if data.columns != result.columns {
        return Err(Error::InputValidation("dataset columns do not match the fitted model".into()));
    }
    let defs = effect_defs(data);
    let re = result.kind == ModelKind::RandomEffects;
    let params = result.params();
    let k = params.len();
    let base = effect_values(data, &defs, &params, re);
    let mut grads = vec![vec![0.0; k]; defs.len()];
    let mut shifted = params.clone();
    for i in 0..k {
        let h = 1e-6 * params[i].abs().max(1.0);
        shifted[i] = params[i] + h;
        let up = effect_values(data, &defs, &shifted, re);
        shifted[i] = params[i] - h;
        let down = effect_values(data, &defs, &shifted, re);
        shifted[i] = params[i];
        for (e, g) in grads.iter_mut().enumerate() {
            g[i] = (up[e] - down[e]) / (2.0 * h);
        }
    }
    Ok(defs
        .into_iter()
        .zip(base)
        .zip(grads)
        .map(|((d, est), g)| MarginalEffect::new(d.name, d.kind, est, g, &result.covariance))
        .collect())
}

pub fn marginal_effect<'a>(result: &'a EstimationResult, name: &str) -> Result<&'a MarginalEffect> {
    result.effect(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectScale {
    AverageMarginal,
    Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunEffect {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sum of a group of effects (or coefficients) with its delta-method
/// standard error.
pub fn long_run_effect(result: &EstimationResult, group: &[&str], scale: EffectScale) -> Result<LongRunEffect> {
    let k = result.n_params();
    let mut estimate = 0.0;
    let mut gradient = vec![0.0; k];
    for name in group {
        match scale {
            EffectScale::AverageMarginal => {
                let e = result.effect(name)?;
                estimate += e.estimate;
                for (acc, g) in gradient.iter_mut().zip(&e.gradient) {
                    *acc += g;
                }
            }
            EffectScale::Coefficient => {
                let j = result
                    .coefficients
                    .iter()
                    .position(|c| c.name == *name)
                    .ok_or_else(|| Error::Lookup(name.to_string()))?;
                estimate += result.coefficients[j].estimate;
                gradient[j] += 1.0;
            }
        }
    }
    let std_error = if result.covariance.len() == k * k {
        quadratic_form(&gradient, &result.covariance).max(0.0).sqrt()
    } else {
        f64::NAN
    };
    Ok(LongRunEffect { estimate, std_error })
}
