use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate, SyntheticDgp};
use crate::error::Result;
use crate::estimator::{fit, Dataset, DesignLayout, EstimationResult, FitOptions, ModelSpec};

/// Seed of replication `r`, mixed from the base seed with SplitMix64.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on `replications` panels generated with derived seeds. Results
/// come back in replication order.
pub fn run_replications<T, F>(dgp: &SyntheticDgp, replications: usize, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(usize, &super::SyntheticPanel) -> Result<T> + Sync,
{
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let d = SyntheticDgp { seed: replication_seed(dgp.seed, r), ..dgp.clone() };
            let panel = generate(&d)?;
            f(r, &panel)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Share of replications whose 95% Wald interval covers the truth.
    pub coverage95: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub parameters: Vec<ParameterSummary>,
    pub rho_truth: f64,
    pub rho_mean: Option<f64>,
    pub sigma_mean: Option<f64>,
    pub failures: Vec<ReplicationFailure>,
}

const Z95: f64 = 1.959_963_984_540_054;

fn summarize(name: &str, truth: f64, draws: &[(f64, f64)]) -> ParameterSummary {
    let n = draws.len() as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let mse = draws.iter().map(|d| (d.0 - truth).powi(2)).sum::<f64>() / n;
    let covered = draws.iter().filter(|(e, s)| (e - truth).abs() <= Z95 * s).count();
    ParameterSummary {
        name: name.to_string(),
        truth,
        mean,
        bias: mean - truth,
        rmse: mse.sqrt(),
        coverage95: covered as f64 / n,
        replications: draws.len(),
    }
}

/// Generates `replications` panels, fits `spec` on each estimation sample
/// and compares the estimates with the generating values. Columns absent
/// from the generator's coefficients have truth zero. Failed replications
/// are listed, not summarized.
pub fn replicate(
    dgp: &SyntheticDgp,
    replications: usize,
    spec: &ModelSpec,
    opts: &FitOptions,
    weighted: bool,
) -> Result<MonteCarloSummary> {
    dgp.validate()?;
    let layout = DesignLayout::new(spec, dgp.wave_years());
    let runs = run_replications(dgp, replications, |r, panel| {
        let obs = panel.estimation_sample()?;
        let data = Dataset::from_observations(&obs, &layout, weighted)?;
        fit(&data, &format!("replication {r}"), opts)
    });

    let mut fits: Vec<EstimationResult> = Vec::new();
    let mut failures = Vec::new();
    for (index, r) in runs.into_iter().enumerate() {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(ReplicationFailure { index, message: e.to_string() }),
        }
    }

    let mut parameters = Vec::new();
    if !fits.is_empty() {
        for (k, col) in layout.columns.iter().enumerate() {
            let truth = dgp.beta.get(&col.name).copied().unwrap_or(0.0);
            let draws: Vec<(f64, f64)> =
                fits.iter().map(|f| (f.coefficients[k].estimate, f.coefficients[k].std_error)).collect();
            parameters.push(summarize(&col.name, truth, &draws));
        }
        if dgp.sigma_nu > 0.0 {
            let draws: Vec<(f64, f64)> =
                fits.iter().filter_map(|f| f.ln_sigma_nu.as_ref().map(|p| (p.estimate, p.std_error))).collect();
            if !draws.is_empty() {
                parameters.push(summarize("ln_sigma_nu", dgp.sigma_nu.ln(), &draws));
            }
        }
    }
    let mean_of = |g: &dyn Fn(&EstimationResult) -> Option<f64>| {
        let v: Vec<f64> = fits.iter().filter_map(g).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let s2 = dgp.sigma_nu * dgp.sigma_nu;
    Ok(MonteCarloSummary {
        parameters,
        rho_truth: s2 / (s2 + 1.0),
        rho_mean: mean_of(&|f| f.rho.as_ref().map(|p| p.estimate)),
        sigma_mean: mean_of(&|f| f.sigma_nu.as_ref().map(|p| p.estimate)),
        failures,
    })
}
