use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MetricsRow;
use crate::error::{Error, Result};

/// Bin edges over the relative income gap. Bins are right-closed; the
/// first is closed on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBins {
    pub edges: Vec<f64>,
}

impl Default for GapBins {
    fn default() -> Self {
        GapBins::equal_width(11)
    }
}

impl GapBins {
    pub fn equal_width(n: usize) -> Self {
        GapBins {
            edges: (0..=n).map(|k| k as f64 / n as f64).collect(),
        }
    }

    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Configuration("gap bin edges must be strictly increasing".into()));
        }
        Ok(GapBins { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bin(&self, gap: f64) -> Option<usize> {
        if gap < self.edges[0] || gap > *self.edges.last()? {
            return None;
        }
        (0..self.len()).find(|&k| gap <= self.edges[k + 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCategory {
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub n: usize,
    /// Share of the total weight in this category.
    pub mass: f64,
    /// `None` when the category is empty.
    pub takeup_rate: Option<f64>,
}

/// `rate = c0 + c1 * gap + c2 * gap^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub coefficients: [f64; 3],
    pub std_errors: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub categories: Vec<GapCategory>,
    /// Needs at least three non-empty categories.
    pub fit: Option<QuadraticFit>,
}

/// Take-up rate by gap category among eligible rows (administrative
/// receipt), and a quadratic fitted to the category rates at the
/// category midpoints, weighted by category mass.
pub fn gap_curve(rows: &[MetricsRow], bins: &GapBins, weighted: bool) -> GapCurve {
    let k = bins.len();
    let mut n = vec![0usize; k];
    let mut mass = vec![0.0; k];
    let mut takers = vec![0.0; k];
    for r in rows.iter().filter(|r| r.eligible) {
        if let Some(b) = bins.bin(r.relative_income_gap) {
            let w = r.w(weighted);
            n[b] += 1;
            mass[b] += w;
            if r.admin_receipt {
                takers[b] += w;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    let categories: Vec<GapCategory> = (0..k)
        .map(|b| GapCategory {
            lower: bins.edges[b],
            upper: bins.edges[b + 1],
            midpoint: 0.5 * (bins.edges[b] + bins.edges[b + 1]),
            n: n[b],
            mass: if total > 0.0 { mass[b] / total } else { 0.0 },
            takeup_rate: (mass[b] > 0.0).then(|| takers[b] / mass[b]),
        })
        .collect();
    let fit = fit_quadratic(&categories);
    GapCurve { categories, fit }
}

fn fit_quadratic(cats: &[GapCategory]) -> Option<QuadraticFit> {
    let pts: Vec<(f64, f64, f64)> = cats
        .iter()
        .filter_map(|c| c.takeup_rate.map(|r| (c.midpoint, r, c.mass)))
        .collect();
    let m = pts.len();
    if m < 3 {
        return None;
    }
    // Weights normalized to mean one so the residual variance is scale free.
    let wsum: f64 = pts.iter().map(|p| p.2).sum();
    let x = DMatrix::from_fn(m, 3, |i, j| pts[i].0.powi(j as i32));
    let w = DVector::from_iterator(m, pts.iter().map(|p| p.2 * m as f64 / wsum));
    let y = DVector::from_iterator(m, pts.iter().map(|p| p.1));
    let xtw = DMatrix::from_fn(3, m, |j, i| x[(i, j)] * w[i]);
    let xtwx_inv = (&xtw * &x).try_inverse()?;
    let beta = &xtwx_inv * (&xtw * &y);
    let resid = &y - &x * &beta;
    let ssr: f64 = (0..m).map(|i| w[i] * resid[i] * resid[i]).sum();
    let sigma2 = if m > 3 { ssr / (m - 3) as f64 } else { f64::NAN };
    Some(QuadraticFit {
        coefficients: [beta[0], beta[1], beta[2]],
        std_errors: [0, 1, 2].map(|j| (sigma2 * xtwx_inv[(j, j)]).sqrt()),
    })
}
