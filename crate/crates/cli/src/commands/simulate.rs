use serde_json::json;
use takeup_core::io;
use takeup_core::synthgen::generate;

use super::say;
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::CliResult;
use crate::SimulateArgs;

const TRUTH_COLUMNS: &[&str] = &["household_id", "wave_year", "eligible", "index", "nu", "upsilon", "takeup"];

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let mut dgp = loaded.config.synthgen.clone();
    if let Some(seed) = args.seed {
        dgp.seed = seed;
    }
    dgp.validate()?;
    let panel = generate(&dgp)?;

    let mut out = Outputs::create(&args.common.out)?;
    let (p, m) = (out.path(io::PANEL), out.path(io::MEMBERS));
    io::write_households(&p, &m, &panel.snapshots)?;
    io::write_spells(&out.path(io::SPELLS), &panel.spells)?;
    io::write_linkage(&out.path(io::LINKAGE), &panel.linked)?;
    io::write_csv(&out.path(io::TRUTH), Some(TRUTH_COLUMNS), &panel.truth)?;
    out.write_text(io::POLICY, &panel.policies.to_toml_string())?;

    say(format!(
        "simulate: {} households, {} household-waves, {} spells",
        dgp.households,
        panel.snapshots.len(),
        panel.spells.len()
    ));
    let record = RunRecord {
        subcommand: "simulate",
        config: &loaded,
        seed: Some(dgp.seed),
        options: json!({ "synthgen": dgp }),
    };
    write_manifest(record, &Inputs::new(Vec::new()), out)
}
