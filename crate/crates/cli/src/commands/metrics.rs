use serde::Serialize;
use serde_json::json;
use takeup_core::io;
use takeup_core::metrics::{
    covariate_means_from_observations, gap_curve, rate_table, sim_quality, subgroup_variables, takeup_types, GapBins,
    Grouping, RateRow, Summary, TypeCell,
};
use takeup_core::pipeline::build_metrics_rows;
use takeup_core::selection::Filter;

use super::{read_entitlements, read_panel, read_selection, say};
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::{CliError, CliResult, Kind};
use crate::MetricsArgs;

pub const NTR: &str = "ntr.csv";
pub const RATES_BY_YEAR: &str = "rates_by_year.csv";
pub const RATES_BY_SAMPLE: &str = "rates_by_sample.csv";
pub const RATES_BY_SUBGROUP: &str = "rates_by_subgroup.csv";
pub const TAKEUP_TYPES: &str = "takeup_types.csv";
pub const GAP_CURVE: &str = "gap_curve.csv";
pub const GAP_CURVE_FIT: &str = "gap_curve_fit.csv";
pub const COVARIATE_MEANS: &str = "covariate_means.csv";
pub const SIM_QUALITY: &str = "sim_quality.csv";
pub const DENSITIES: &str = "densities.csv";

pub const RATE_COLUMNS: &[&str] = &[
    "label",
    "ntr_uncorrected",
    "ntr_corrected",
    "difference_pp",
    "ber_uncorrected",
    "ber_corrected",
    "n_rows",
    "n_eligible",
];

#[derive(Serialize)]
struct TypeRow {
    kind: &'static str,
    households: usize,
    share: Option<f64>,
    weighted_share: Option<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    lower: f64,
    upper: f64,
    midpoint: f64,
    n: usize,
    mass: f64,
    takeup_rate: Option<f64>,
    fitted: Option<f64>,
}

#[derive(Serialize)]
struct FitRow {
    term: &'static str,
    coefficient: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct QualityRow {
    eligible: bool,
    receipt: bool,
    n: usize,
    reported_median: Option<f64>,
    reported_mean: Option<f64>,
    reported_sd: Option<f64>,
    simulated_median: Option<f64>,
    simulated_mean: Option<f64>,
    simulated_sd: Option<f64>,
}

#[derive(Serialize)]
struct DensityRow<'a> {
    label: &'a str,
    bandwidth: f64,
    x: f64,
    density: f64,
}

fn write_rates(out: &mut Outputs, name: &str, rows: &[RateRow]) -> CliResult<()> {
    Ok(io::write_csv(&out.path(name), Some(RATE_COLUMNS), rows)?)
}

pub fn run(args: MetricsArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let n_bins = loaded.config.metrics.gap_bins;
    if n_bins == 0 {
        return Err(CliError::new(Kind::Config, "metrics.gap_bins must be positive"));
    }
    let weighted = args.weights.on();
    let mut inputs = Inputs::new(args.inputs.input);
    let panel = read_panel(&mut inputs)?;
    let selection = read_selection(&mut inputs, &panel)?;
    let ents = read_entitlements(&mut inputs)?;
    let policies = inputs.policies()?;
    let obs = io::read_observations(&inputs.find(io::OBSERVATIONS)?)?;

    // Rates need ineligible rows too: keep everything that fails no filter
    // other than simulated ineligibility.
    let mut base = Vec::new();
    for (h, s) in panel.into_iter().zip(&selection) {
        if s.failed_filters()?.iter().all(|f| *f == Filter::SimulatedIneligible) {
            base.push(h);
        }
    }
    let rows = build_metrics_rows(&base, &ents, &policies)?;

    let mut out = Outputs::create(&args.common.out)?;
    write_rates(&mut out, NTR, &rate_table(&rows, Grouping::Total, weighted).rows)?;
    write_rates(&mut out, RATES_BY_YEAR, &rate_table(&rows, Grouping::Year, weighted).rows)?;
    write_rates(&mut out, RATES_BY_SAMPLE, &rate_table(&rows, Grouping::Sample, weighted).rows)?;
    let mut by_group: Vec<RateRow> = Vec::new();
    for var in subgroup_variables(&rows) {
        let t = rate_table(&rows, Grouping::Variable(var), weighted);
        by_group.extend(t.rows.into_iter().filter(|r| r.label != "total"));
    }
    by_group.extend(rate_table(&rows, Grouping::Total, weighted).rows);
    write_rates(&mut out, RATES_BY_SUBGROUP, &by_group)?;

    let types = takeup_types(&rows);
    let type_row = |kind, c: TypeCell| TypeRow {
        kind,
        households: c.households,
        share: c.share,
        weighted_share: c.weighted_share,
    };
    io::write_csv(
        &out.path(TAKEUP_TYPES),
        None,
        [
            type_row("never", types.never),
            type_row("sometimes", types.sometimes),
            type_row("always", types.always),
        ],
    )?;

    let curve = gap_curve(&rows, &GapBins::equal_width(n_bins), weighted);
    let fitted = |g: f64| curve.fit.as_ref().map(|f| f.coefficients[0] + f.coefficients[1] * g + f.coefficients[2] * g * g);
    io::write_csv(
        &out.path(GAP_CURVE),
        None,
        curve.categories.iter().map(|c| CurveRow {
            lower: c.lower,
            upper: c.upper,
            midpoint: c.midpoint,
            n: c.n,
            mass: c.mass,
            takeup_rate: c.takeup_rate,
            fitted: fitted(c.midpoint),
        }),
    )?;
    let fit_rows: Vec<FitRow> = curve
        .fit
        .iter()
        .flat_map(|f| {
            ["intercept", "gap", "gap_sq"].into_iter().enumerate().map(|(k, term)| FitRow {
                term,
                coefficient: f.coefficients[k],
                std_error: f.std_errors[k],
            })
        })
        .collect();
    io::write_csv(&out.path(GAP_CURVE_FIT), Some(&["term", "coefficient", "std_error"]), fit_rows)?;

    let means = covariate_means_from_observations(&obs, weighted);
    let header = [
        "name",
        "mean_all",
        "mean_takeup",
        "mean_non_takeup",
        "difference",
        "z_value",
        "p_value",
        "stars",
    ];
    io::write_csv(&out.path(COVARIATE_MEANS), Some(&header), &means)?;

    let q = sim_quality(&rows, weighted);
    let part = |s: Option<Summary>, f: fn(&Summary) -> f64| s.as_ref().map(f);
    io::write_csv(
        &out.path(SIM_QUALITY),
        None,
        q.cells.iter().map(|c| QualityRow {
            eligible: c.eligible,
            receipt: c.receipt,
            n: c.n,
            reported_median: part(c.reported, |s| s.median),
            reported_mean: part(c.reported, |s| s.mean),
            reported_sd: part(c.reported, |s| s.sd),
            simulated_median: part(c.simulated, |s| s.median),
            simulated_mean: part(c.simulated, |s| s.mean),
            simulated_sd: part(c.simulated, |s| s.sd),
        }),
    )?;
    io::write_csv(
        &out.path(DENSITIES),
        Some(&["label", "bandwidth", "x", "density"]),
        q.densities.iter().flat_map(|d| {
            d.grid.iter().zip(&d.density).map(move |(x, y)| DensityRow {
                label: &d.label,
                bandwidth: d.bandwidth,
                x: *x,
                density: *y,
            })
        }),
    )?;

    say(format!("metrics: {} rows in the rate base", rows.len()));
    let record = RunRecord {
        subcommand: "metrics",
        config: &loaded,
        seed: None,
        options: json!({ "weights": weighted, "gap_bins": n_bins }),
    };
    write_manifest(record, &inputs, out)
}
