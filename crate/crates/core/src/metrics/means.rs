use serde::{Deserialize, Serialize};

use crate::estimator::normal::{significance_stars, two_sided_p};
use crate::estimator::{ColumnRole, DesignLayout, ModelTag, PanelObservation};

/// Weighted means for all, take-up (TU) and non-take-up (NTU) rows, with a
/// two-sample z-test of TU minus NTU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub name: String,
    pub mean_all: f64,
    pub mean_takeup: Option<f64>,
    pub mean_non_takeup: Option<f64>,
    pub difference: Option<f64>,
    /// `None` when either group has fewer than two rows.
    pub z_value: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: Option<String>,
}

struct Moments {
    n: usize,
    sw: f64,
    sw2: f64,
    mean: f64,
    var: f64,
}

fn moments<'a>(it: impl Iterator<Item = (f64, f64)> + Clone + 'a) -> Moments {
    let (mut n, mut sw, mut sw2, mut swx) = (0usize, 0.0, 0.0, 0.0);
    for (w, x) in it.clone() {
        n += 1;
        sw += w;
        sw2 += w * w;
        swx += w * x;
    }
    let mean = if sw > 0.0 { swx / sw } else { f64::NAN };
    let var = if sw > 0.0 {
        it.map(|(w, x)| w * (x - mean).powi(2)).sum::<f64>() / sw
    } else {
        f64::NAN
    };
    Moments { n, sw, sw2, mean, var }
}

/// `rows` are `(takeup, weight, values)` with one value per name. The
/// standard error uses each group's weighted variance over its Kish
/// effective sample size.
pub fn covariate_means(names: &[String], rows: &[(bool, f64, Vec<f64>)]) -> Vec<MeanRow> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let all = moments(rows.iter().map(move |r| (r.1, r.2[j])));
            let tu = moments(rows.iter().filter(|r| r.0).map(move |r| (r.1, r.2[j])));
            let ntu = moments(rows.iter().filter(|r| !r.0).map(move |r| (r.1, r.2[j])));
            let group_mean = |m: &Moments| (m.sw > 0.0).then_some(m.mean);
            let difference = group_mean(&tu).zip(group_mean(&ntu)).map(|(a, b)| a - b);
            let z = if tu.n >= 2 && ntu.n >= 2 {
                difference.map(|d| {
                    let neff = |m: &Moments| m.sw * m.sw / m.sw2;
                    let se = (tu.var / neff(&tu) + ntu.var / neff(&ntu)).sqrt();
                    if d == 0.0 {
                        0.0
                    } else {
                        d / se
                    }
                })
            } else {
                None
            };
            let p = z.map(two_sided_p);
            MeanRow {
                name: name.clone(),
                mean_all: all.mean,
                mean_takeup: group_mean(&tu),
                mean_non_takeup: group_mean(&ntu),
                difference,
                z_value: z,
                p_value: p,
                stars: p.map(|p| significance_stars(p).to_string()),
            }
        })
        .collect()
}

/// Means of the regressors of the largest specification (intercept
/// excluded; incomes in thousands).
pub fn covariate_means_from_observations(obs: &[PanelObservation], weighted: bool) -> Vec<MeanRow> {
    let layout = DesignLayout::new(&ModelTag::M3.spec(), obs.iter().map(|o| o.wave_year));
    let keep: Vec<usize> = (0..layout.width())
        .filter(|&j| layout.columns[j].role != ColumnRole::Intercept)
        .collect();
    let names: Vec<String> = keep.iter().map(|&j| layout.columns[j].name.clone()).collect();
    let rows: Vec<(bool, f64, Vec<f64>)> = obs
        .iter()
        .map(|o| {
            let x = layout.row(o);
            (o.takeup, if weighted { o.weight } else { 1.0 }, keep.iter().map(|&j| x[j]).collect())
        })
        .collect();
    covariate_means(&names, &rows)
}
