use std::collections::HashMap;

use serde::Serialize;
use serde_json::json;
use takeup_core::io;
use takeup_core::rules::simulate_population;
use takeup_core::selection::{apply_cascade, takeup_counts};

use super::{read_panel, say};
use crate::config;
use crate::context::{write_manifest, Inputs, Outputs, RunRecord};
use crate::error::CliResult;
use crate::StageArgs;

#[derive(Serialize)]
struct CountRow {
    wave_year: String,
    takeup: u64,
    non_takeup: u64,
    ntr: Option<f64>,
}

pub fn run(args: StageArgs) -> CliResult<()> {
    let loaded = config::load(args.common.config.as_deref())?;
    let selection = loaded.config.selection_config()?;
    let mut inputs = Inputs::new(args.inputs.input);
    let panel = read_panel(&mut inputs)?;
    let linked = io::read_linkage(&inputs.find(io::LINKAGE)?)?;
    let policies = inputs.policies()?;

    let ents = simulate_population(&panel, &policies)?;
    let map: HashMap<_, _> = ents.iter().map(|e| ((e.household_id, e.wave_year), e.clone())).collect();
    let outcome = apply_cascade(&panel, &map, &linked, &selection)?;
    let counts = takeup_counts(&outcome.kept);

    let mut out = Outputs::create(&args.common.out)?;
    io::write_entitlements(&out.path(io::ENTITLEMENTS), &ents)?;
    io::write_selection(&out.path(io::SELECTION), &io::selection_records(&panel, &outcome))?;
    io::write_ledger(&out.path(io::LEDGER), &outcome.ledger)?;
    let mut rows: Vec<CountRow> = counts
        .by_year
        .iter()
        .map(|(y, (t, n))| CountRow {
            wave_year: y.to_string(),
            takeup: *t,
            non_takeup: *n,
            ntr: counts.ntr_in(*y).ok(),
        })
        .collect();
    rows.push(CountRow {
        wave_year: "total".into(),
        takeup: counts.takeup,
        non_takeup: counts.non_takeup,
        ntr: counts.ntr().ok(),
    });
    io::write_csv(&out.path("takeup_counts.csv"), None, &rows)?;

    say(format!("select: {} of {} household-waves kept", outcome.kept.len(), panel.len()));
    let record = RunRecord {
        subcommand: "select",
        config: &loaded,
        seed: None,
        options: json!({ "selection": loaded.config.selection }),
    };
    write_manifest(record, &inputs, out)
}
