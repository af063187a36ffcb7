use serde_json::json;
use takeup_core::io;
use takeup_core::pipeline::build_observations;
use takeup_core::spells::{Deflator, SpellIndex};

use super::{read_entitlements, read_panel, read_selection, say};
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::CliResult;
use crate::StageArgs;

pub fn run(args: StageArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let mut inputs = Inputs::new(args.inputs.input);
    let panel = read_panel(&mut inputs)?;
    let selection = read_selection(&mut inputs, &panel)?;
    let ents = read_entitlements(&mut inputs)?;
    let spells = io::read_spells(&inputs.find(io::SPELLS)?)?;
    let policies = inputs.policies()?;

    let kept: Vec<_> = panel
        .into_iter()
        .zip(&selection)
        .filter(|(_, s)| s.kept())
        .map(|(h, _)| h)
        .collect();
    let index = SpellIndex::new(spells)?;
    let obs = build_observations(&kept, &ents, &index, &Deflator::from_policies(&policies))?;

    let mut out = Outputs::create(&args.common.out)?;
    io::write_observations(&out.path(io::OBSERVATIONS), &obs)?;
    say(format!("covariates: {} estimation rows", obs.len()));
    let record = RunRecord {
        subcommand: "covariates",
        config: &loaded,
        seed: None,
        options: json!({}),
    };
    write_manifest(record, &inputs, out)
}
