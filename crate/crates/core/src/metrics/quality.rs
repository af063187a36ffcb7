use serde::{Deserialize, Serialize};

use super::MetricsRow;
use crate::estimator::normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Weighted median, mean and population standard deviation. With equal
/// weights the median is the usual midpoint of the two central values.
pub fn summarize(values: &[(f64, f64)]) -> Option<Summary> {
    let total: f64 = values.iter().map(|v| v.1).sum();
    if values.is_empty() || !(total > 0.0) {
        return None;
    }
    let mean = values.iter().map(|(x, w)| x * w).sum::<f64>() / total;
    let var = values.iter().map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let mut cum = 0.0;
    let mut median = sorted[sorted.len() - 1].0;
    for (i, (x, w)) in sorted.iter().enumerate() {
        cum += w;
        if (cum - half).abs() <= 1e-12 * total && i + 1 < sorted.len() {
            median = 0.5 * (x + sorted[i + 1].0);
            break;
        }
        if cum > half {
            median = *x;
            break;
        }
    }
    Some(Summary { median, mean, sd: var.sqrt() })
}

/// One cell of simulated eligibility by administrative receipt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCell {
    pub eligible: bool,
    pub receipt: bool,
    pub n: usize,
    pub reported: Option<Summary>,
    pub simulated: Option<Summary>,
}

/// Gaussian kernel density on an evenly spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub label: String,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl Density {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimQuality {
    pub cells: Vec<QualityCell>,
    pub densities: Vec<Density>,
}

const GRID_POINTS: usize = 512;

/// Weighted Gaussian KDE with Silverman's rule-of-thumb bandwidth
/// `0.9 min(sd, IQR/1.34) n^(-1/5)`. The grid extends four bandwidths
/// beyond the data. Returns `None` for empty input.
pub fn kde(label: &str, values: &[(f64, f64)]) -> Option<Density> {
    let s = summarize(values)?;
    let mut xs: Vec<f64> = values.iter().map(|v| v.0).collect();
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (xs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
    };
    let iqr = q(0.75) - q(0.25);
    let mut spread = if iqr > 0.0 { s.sd.min(iqr / 1.34) } else { s.sd };
    if !(spread > 0.0) {
        spread = s.mean.abs().max(1.0) * 1e-3;
    }
    let h = 0.9 * spread * (xs.len() as f64).powf(-0.2);
    let (lo, hi) = (xs[0] - 4.0 * h, xs[xs.len() - 1] + 4.0 * h);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let total: f64 = values.iter().map(|v| v.1).sum();
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let density = grid
        .iter()
        .map(|g| values.iter().map(|(x, w)| w * normal::pdf((g - x) / h)).sum::<f64>() / (total * h))
        .collect();
    Some(Density { label: label.to_string(), bandwidth: h, grid, density })
}

/// Reported against simulated disposable income by eligibility and
/// receipt cell, plus densities of both incomes and of entitlements of
/// eligible takers and non-takers.
pub fn sim_quality(rows: &[MetricsRow], weighted: bool) -> SimQuality {
    let mut cells = Vec::with_capacity(4);
    for eligible in [true, false] {
        for receipt in [true, false] {
            let sel: Vec<&MetricsRow> =
                rows.iter().filter(|r| r.eligible == eligible && r.admin_receipt == receipt).collect();
            let pick = |f: fn(&MetricsRow) -> f64| -> Vec<(f64, f64)> { sel.iter().map(|r| (f(r), r.w(weighted))).collect() };
            cells.push(QualityCell {
                eligible,
                receipt,
                n: sel.len(),
                reported: summarize(&pick(|r| r.reported_income)),
                simulated: summarize(&pick(|r| r.simulated_income)),
            });
        }
    }
    let series = |label: &str, filter: &dyn Fn(&MetricsRow) -> bool, f: fn(&MetricsRow) -> f64| {
        let v: Vec<(f64, f64)> = rows.iter().filter(|r| filter(r)).map(|r| (f(r), r.w(weighted))).collect();
        kde(label, &v)
    };
    let densities = [
        series("simulated_income", &|_| true, |r| r.simulated_income),
        series("reported_income", &|_| true, |r| r.reported_income),
        series("entitlement_takeup", &|r| r.eligible && r.admin_receipt, |r| r.entitlement),
        series("entitlement_non_takeup", &|r| r.eligible && !r.admin_receipt, |r| r.entitlement),
    ]
    .into_iter()
    .flatten()
    .collect();
    SimQuality { cells, densities }
}
