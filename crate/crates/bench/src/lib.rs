//! Shared fixtures for the benchmarks.

use takeup_core::estimator::{Block, Dataset, DesignLayout, ModelSpec};
use takeup_core::synthgen::{generate, SyntheticDgp, SyntheticPanel};

pub fn panel(households: usize) -> SyntheticPanel {
    generate(&SyntheticDgp { households, ..Default::default() }).expect("default generator config is valid")
}

/// Estimation sample of `panel` under a five-block specification.
pub fn dataset(panel: &SyntheticPanel) -> Dataset {
    let spec = ModelSpec::new([Block::IncomeGap, Block::FemaleHead, Block::East, Block::HomeOwner, Block::ReceiptShares]);
    let obs = panel.estimation_sample().expect("synthetic panel passes selection");
    let layout = DesignLayout::new(&spec, panel.dgp.wave_years());
    Dataset::from_observations(&obs, &layout, false).expect("synthetic rows are valid")
}
