use serde_json::json;
use takeup_core::estimator::FitOptions;
use takeup_core::io;
use takeup_core::synthgen::replicate;

use super::say;
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::{CliError, CliResult, Kind};
use crate::MonteCarloArgs;

pub fn run(args: MonteCarloArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let mut dgp = loaded.config.synthgen.clone();
    if let Some(seed) = args.seed {
        dgp.seed = seed;
    }
    if let Some(n) = args.nodes {
        dgp.montecarlo.nodes = n;
    }
    if let Some(w) = args.weights {
        dgp.montecarlo.weighted = w.on();
    }
    dgp.validate()?;
    let mc = dgp.montecarlo.clone();
    let opts = FitOptions {
        nodes: mc.nodes,
        marginal_effects: false,
        ..FitOptions::default()
    };
    let summary = replicate(&dgp, mc.replications, &mc.spec(), &opts, mc.weighted)?;
    if summary.parameters.is_empty() {
        let first = summary.failures.first().map(|f| f.message.clone()).unwrap_or_default();
        return Err(CliError::new(
            Kind::NonConvergence,
            format!("all {} replications failed; first: {first}", mc.replications),
        ));
    }

    let mut out = Outputs::create(&args.common.out)?;
    io::write_csv(&out.path("montecarlo.csv"), None, &summary.parameters)?;
    io::write_csv(&out.path("montecarlo_failures.csv"), Some(&["index", "message"]), &summary.failures)?;
    out.write_json("montecarlo.json", &summary)?;
    say(format!(
        "montecarlo: {} replications, {} failed",
        mc.replications,
        summary.failures.len()
    ));
    let record = RunRecord {
        subcommand: "montecarlo",
        config: &loaded,
        seed: Some(dgp.seed),
        options: json!({ "synthgen": dgp }),
    };
    write_manifest(record, &Inputs::new(Vec::new()), out)
}
