use serde::Serialize;
use serde_json::json;
use takeup_core::estimator::{fit, Dataset, DesignLayout, EffectKind, EstimationResult, FitOptions, ModelKind, ModelTag};
use takeup_core::io;

use super::say;
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::{CliError, CliResult, Kind};
use crate::{EstimateArgs, ModelChoice};

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Serialize)]
struct CoefficientRow<'a> {
    name: &'a str,
    estimate: f64,
    std_error: f64,
    z_value: f64,
    p_value: f64,
    stars: &'static str,
}

#[derive(Serialize)]
struct EffectRow<'a> {
    name: &'a str,
    kind: &'static str,
    estimate: f64,
    std_error: f64,
    ci90_lower: f64,
    ci90_upper: f64,
    ci95_lower: f64,
    ci95_upper: f64,
    ci99_lower: f64,
    ci99_upper: f64,
}

fn tags(choice: ModelChoice) -> Vec<ModelTag> {
    match choice {
        ModelChoice::M0 => vec![ModelTag::M0],
        ModelChoice::M1 => vec![ModelTag::M1],
        ModelChoice::M2 => vec![ModelTag::M2],
        ModelChoice::M3 => vec![ModelTag::M3],
        ModelChoice::All => ModelTag::ALL.to_vec(),
    }
}

fn write_result(out: &mut Outputs, r: &EstimationResult) -> CliResult<()> {
    let tag = &r.label;
    out.write_json(&format!("model_{tag}.json"), r)?;
    let coefs = r.coefficients.iter().map(|c| CoefficientRow {
        name: &c.name,
        estimate: c.estimate,
        std_error: c.std_error,
        z_value: c.z_value,
        p_value: c.p_value,
        stars: stars(c.p_value),
    });
    io::write_csv(&out.path(&format!("coefficients_{tag}.csv")), None, coefs)?;
    let effects = r.marginal_effects.iter().map(|e| EffectRow {
        name: &e.name,
        kind: match e.kind {
            EffectKind::Derivative => "derivative",
            EffectKind::DiscreteChange => "discrete_change",
        },
        estimate: e.estimate,
        std_error: e.std_error,
        ci90_lower: e.ci90.0,
        ci90_upper: e.ci90.1,
        ci95_lower: e.ci95.0,
        ci95_upper: e.ci95.1,
        ci99_lower: e.ci99.0,
        ci99_upper: e.ci99.1,
    });
    let header = [
        "name", "kind", "estimate", "std_error", "ci90_lower", "ci90_upper", "ci95_lower", "ci95_upper", "ci99_lower",
        "ci99_upper",
    ];
    io::write_csv(&out.path(&format!("effects_{tag}.csv")), Some(&header), effects)?;
    Ok(())
}

pub fn run(args: EstimateArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let est = &loaded.config.estimate;
    let nodes = args.nodes.unwrap_or(est.nodes);
    let opts = FitOptions {
        kind: if est.pooled { ModelKind::Pooled } else { ModelKind::RandomEffects },
        nodes,
        adaptive: est.adaptive,
        cluster_robust: est.cluster_robust,
        ..FitOptions::default()
    };
    let weighted = args.weights.on();
    let mut inputs = Inputs::new(args.inputs.input);
    let obs = io::read_observations(&inputs.find(io::OBSERVATIONS)?)?;
    if obs.is_empty() {
        return Err(CliError::new(Kind::Input, "estimation sample is empty"));
    }
    let years: Vec<i32> = obs.iter().map(|o| o.wave_year).collect();

    let mut out = Outputs::create(&args.common.out)?;
    let models = tags(args.model);
    for &tag in &models {
        let layout = DesignLayout::new(&tag.spec(), years.iter().copied());
        let data = Dataset::from_observations(&obs, &layout, weighted)?;
        let r = fit(&data, &tag.to_string(), &opts)?;
        say(format!(
            "estimate: {tag} loglik {:.4}, {} rows, {} households",
            r.loglik, r.n_obs, r.n_households
        ));
        write_result(&mut out, &r)?;
    }
    let record = RunRecord {
        subcommand: "estimate",
        config: &loaded,
        seed: None,
        options: json!({
            "models": models.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "weights": weighted,
            "nodes": nodes,
            "adaptive": est.adaptive,
            "pooled": est.pooled,
            "cluster_robust": est.cluster_robust,
        }),
    };
    write_manifest(record, &inputs, out)
}
