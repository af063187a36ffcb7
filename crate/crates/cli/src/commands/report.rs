use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use takeup_core::estimator::{EstimationResult, ModelTag};
use takeup_core::io;
use takeup_core::metrics::RateRow;

use super::estimate::stars;
use super::metrics::{
    COVARIATE_MEANS, GAP_CURVE, NTR, RATES_BY_SAMPLE, RATES_BY_SUBGROUP, RATES_BY_YEAR, RATE_COLUMNS, SIM_QUALITY,
    TAKEUP_TYPES,
};
use super::say;
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::{io_error, CliError, CliResult, Kind};
use crate::StageArgs;

#[derive(Deserialize)]
struct CountRow {
    wave_year: String,
    takeup: u64,
    non_takeup: u64,
}

#[derive(Serialize)]
struct NtrPoint<'a> {
    label: &'a str,
    ntr_uncorrected: Option<f64>,
    ntr_corrected: Option<f64>,
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::new(Kind::Input, format!("{}: {e}", path.display()))
}

fn write_records(path: &Path, rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Selection ledger followed by take-up and non-take-up counts of the
/// final sample.
fn selection_table(ledger: &Path, counts: &Path, out: &Path) -> CliResult<()> {
    let mut r = csv::Reader::from_path(ledger).map_err(|e| csv_err(ledger, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_err(ledger, e))?.iter().map(String::from).collect();
    let mut rows = vec![header.clone()];
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_err(ledger, e))?.iter().map(String::from).collect());
    }
    let counts: Vec<CountRow> = io::read_csv(counts, &["wave_year", "takeup", "non_takeup"])?;
    let by_label: BTreeMap<&str, &CountRow> = counts.iter().map(|c| (c.wave_year.as_str(), c)).collect();
    for (step, pick) in [("thereof_takeup", true), ("thereof_non_takeup", false)] {
        let mut row = vec![step.to_string()];
        for col in &header[1..] {
            let v = by_label.get(col.as_str()).map(|c| if pick { c.takeup } else { c.non_takeup }).unwrap_or(0);
            row.push(v.to_string());
        }
        rows.push(row);
    }
    write_records(out, &rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Coefficients of every model side by side, then the variance
/// components and fit statistics.
fn coefficient_table(models: &[EstimationResult]) -> Vec<Vec<String>> {
    let mut header = vec!["name".to_string()];
    for m in models {
        header.extend([format!("{}_estimate", m.label), format!("{}_std_error", m.label), format!("{}_stars", m.label)]);
    }
    let mut names: Vec<&str> = Vec::new();
    for m in models {
        for c in &m.coefficients {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
    }
    let mut rows = vec![header];
    for name in names {
        let mut row = vec![name.to_string()];
        for m in models {
            match m.coefficients.iter().find(|c| c.name == name) {
                Some(c) => row.extend([c.estimate.to_string(), c.std_error.to_string(), stars(c.p_value).to_string()]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        rows.push(row);
    }
    for (name, get) in [
        ("sigma_nu", (|m: &EstimationResult| m.sigma_nu) as fn(&EstimationResult) -> _),
        ("rho", |m: &EstimationResult| m.rho),
    ] {
        let mut row = vec![name.to_string()];
        for m in models {
            let p = get(m);
            row.extend([opt(p.map(|p| p.estimate)), opt(p.map(|p| p.std_error)), String::new()]);
        }
        rows.push(row);
    }
    for (name, get) in [
        ("loglik", (|m: &EstimationResult| m.loglik.to_string()) as fn(&EstimationResult) -> String),
        ("n_obs", |m: &EstimationResult| m.n_obs.to_string()),
        ("n_households", |m: &EstimationResult| m.n_households.to_string()),
    ] {
        let mut row = vec![name.to_string()];
        for m in models {
            row.extend([get(m), String::new(), String::new()]);
        }
        rows.push(row);
    }
    rows
}

fn effects_table(models: &[EstimationResult]) -> Vec<Vec<String>> {
    let mut header = vec!["name".to_string()];
    for m in models {
        header.extend([
            format!("{}_effect", m.label),
            format!("{}_std_error", m.label),
            format!("{}_ci95_lower", m.label),
            format!("{}_ci95_upper", m.label),
        ]);
    }
    let mut names: Vec<&str> = Vec::new();
    for m in models {
        for e in &m.marginal_effects {
            if !names.contains(&e.name.as_str()) {
                names.push(&e.name);
            }
        }
    }
    let mut rows = vec![header];
    for name in names {
        let mut row = vec![name.to_string()];
        for m in models {
            match m.marginal_effects.iter().find(|e| e.name == name) {
                Some(e) => row.extend([
                    e.estimate.to_string(),
                    e.std_error.to_string(),
                    e.ci95.0.to_string(),
                    e.ci95.1.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        rows.push(row);
    }
    rows
}

fn ntr_points(rows: &[RateRow]) -> Vec<NtrPoint<'_>> {
    rows.iter()
        .filter(|r| r.label != "total")
        .map(|r| NtrPoint {
            label: &r.label,
            ntr_uncorrected: r.ntr_uncorrected,
            ntr_corrected: r.ntr_corrected,
        })
        .collect()
}

pub fn run(args: StageArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let mut inputs = Inputs::new(args.inputs.input);

    let mut models = Vec::new();
    for tag in ModelTag::ALL {
        if let Some(p) = inputs.find_optional(&format!("model_{tag}.json")) {
            let text = std::fs::read_to_string(&p).map_err(|e| io_error(&p, e))?;
            let r: EstimationResult = serde_json::from_str(&text)
                .map_err(|e| CliError::new(Kind::Input, format!("{}: {e}", p.display())))?;
            models.push(r);
        }
    }
    if models.is_empty() {
        return Err(CliError::new(
            Kind::MissingArtifact,
            "missing upstream artifact: no model_m*.json from `estimate` in inputs",
        ));
    }
    let by_year_path = inputs.find(RATES_BY_YEAR)?;
    let by_sample_path = inputs.find(RATES_BY_SAMPLE)?;
    let ntr_path = inputs.find(NTR)?;
    let sources = [
        ("table2.csv", inputs.find(TAKEUP_TYPES)?),
        ("table_b1.csv", inputs.find(RATES_BY_SUBGROUP)?),
        ("table_c1.csv", inputs.find(SIM_QUALITY)?),
        ("table_d1.csv", inputs.find(COVARIATE_MEANS)?),
        ("fig4.csv", inputs.find(GAP_CURVE)?),
    ];
    let ledger = inputs.find(io::LEDGER)?;
    let counts = inputs.find("takeup_counts.csv")?;

    let by_year: Vec<RateRow> = io::read_csv(&by_year_path, RATE_COLUMNS)?;
    let by_sample: Vec<RateRow> = io::read_csv(&by_sample_path, RATE_COLUMNS)?;
    let total: Vec<RateRow> = io::read_csv(&ntr_path, RATE_COLUMNS)?;
    let year_total = by_year.iter().find(|r| r.label == "total");
    if total.len() != 1 || year_total != total.first() {
        return Err(CliError::new(
            Kind::Input,
            format!("{} and {} disagree on the total", ntr_path.display(), by_year_path.display()),
        ));
    }

    let mut out = Outputs::create(&args.common.out)?;
    io::write_csv(&out.path("table1.csv"), Some(RATE_COLUMNS), &by_year)?;
    for (name, src) in &sources {
        out.copy_from(name, src)?;
    }
    selection_table(&ledger, &counts, &out.path("table_a1.csv"))?;
    write_records(&out.path("table_e1.csv"), &coefficient_table(&models))?;
    write_records(&out.path("table_e1_effects.csv"), &effects_table(&models))?;
    let header = ["label", "ntr_uncorrected", "ntr_corrected"];
    io::write_csv(&out.path("fig1.csv"), Some(&header), ntr_points(&by_year))?;
    io::write_csv(&out.path("fig2.csv"), Some(&header), ntr_points(&by_sample))?;

    say(format!("report: {} models", models.len()));
    let record = RunRecord {
        subcommand: "report",
        config: &loaded,
        seed: None,
        options: json!({ "models": models.iter().map(|m| m.label.clone()).collect::<Vec<_>>() }),
    };
    write_manifest(record, &inputs, out)
}
