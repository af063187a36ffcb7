pub mod covariates;
pub mod estimate;
pub mod metrics;
pub mod montecarlo;
pub mod report;
pub mod select;
pub mod simulate;

use takeup_core::io::{self, SelectionRecord};
use takeup_core::rules::{EntitlementResult, HouseholdSnapshot};

use crate::context::Inputs;
use crate::error::{CliError, CliResult, Kind};

pub fn read_panel(inputs: &mut Inputs) -> CliResult<Vec<HouseholdSnapshot>> {
    let panel = inputs.find(io::PANEL)?;
    let members = inputs.find(io::MEMBERS)?;
    Ok(io::read_households(&panel, &members)?)
}

pub fn read_entitlements(inputs: &mut Inputs) -> CliResult<Vec<EntitlementResult>> {
    Ok(io::read_entitlements(&inputs.find(io::ENTITLEMENTS)?)?)
}

/// Selection records, checked to line up with `panel` row by row.
pub fn read_selection(inputs: &mut Inputs, panel: &[HouseholdSnapshot]) -> CliResult<Vec<SelectionRecord>> {
    let path = inputs.find(io::SELECTION)?;
    let recs = io::read_selection(&path)?;
    let aligned = recs.len() == panel.len()
        && recs.iter().zip(panel).all(|(r, h)| r.household_id == h.household_id && r.wave_year == h.wave_year);
    if !aligned {
        return Err(CliError::new(
            Kind::Input,
            format!("{} does not match the household panel", path.display()),
        ));
    }
    Ok(recs)
}

pub fn say(line: impl AsRef<str>) {
    println!("{}", line.as_ref());
}
