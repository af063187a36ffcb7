//! Synthetic household panels with a known take-up process.
//!
//! Each household is simulated quarter by quarter from three years before
//! the first wave: adult employment follows a two-state Markov chain and
//! log wages an AR(1) around a household-type level. Every quarter's
//! entitlement comes from the rules engine. Outside interview quarters an
//! eligible household receives UB II when
//!
//! ```text
//! a + b * gap + c * sigma_nu * nu + e > 0,   e ~ N(0, 1)
//! ```
//!
//! with the same household effect `nu` as below; `c = 0` makes past
//! receipt independent of it. In an interview quarter it
//! takes up when
//!
//! ```text
//! x'beta + sigma_nu * nu + upsilon > 0,   nu, upsilon ~ N(0, 1)
//! ```
//!
//! where `x` is built from the household's own spell history exactly as
//! the estimation pipeline builds it. Reported receipt then passes through
//! under- and over-reporting.

mod generate;
mod replicate;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Block, DesignLayout, ModelSpec, ModelTag};

pub use generate::{generate, SyntheticPanel, TruthRecord};
pub use replicate::{
    replicate, replication_seed, run_replications, MonteCarloSummary, ParameterSummary, ReplicationFailure,
};

/// Quarterly labour-income process of adults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncomeProcess {
    /// AR(1) coefficient of the log wage deviation.
    pub persistence: f64,
    pub innovation_sd: f64,
    /// Mean log monthly gross wage by household type.
    pub level_single: f64,
    pub level_couple: f64,
    pub level_single_parent: f64,
    pub level_couple_with_children: f64,
    /// Quarterly probability of keeping a job.
    pub job_keep: f64,
    /// Quarterly probability of finding a job when not employed.
    pub job_find: f64,
}

impl Default for IncomeProcess {
    fn default() -> Self {
        IncomeProcess {
            persistence: 0.8,
            innovation_sd: 0.2,
            level_single: 7.0,
            level_couple: 7.1,
            level_single_parent: 6.8,
            level_couple_with_children: 7.2,
            job_keep: 0.85,
            job_find: 0.2,
        }
    }
}

/// Settings of the `montecarlo` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub replications: usize,
    /// Estimated specification; `blocks` overrides `model` when given.
    pub model: ModelTag,
    pub blocks: Option<Vec<Block>>,
    pub nodes: usize,
    pub weighted: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            replications: 20,
            model: ModelTag::M0,
            blocks: None,
            nodes: 32,
            weighted: false,
        }
    }
}

impl MonteCarloConfig {
    pub fn spec(&self) -> ModelSpec {
        match &self.blocks {
            Some(b) => ModelSpec::new(b.iter().copied()),
            None => self.model.spec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDgp {
    pub seed: u64,
    pub households: usize,
    pub waves: usize,
    pub first_year: i32,
    /// Scale of the household random effect.
    pub sigma_nu: f64,
    /// Coefficients by design column name; absent columns are zero.
    pub beta: BTreeMap<String, f64>,
    /// Per-wave probability of leaving the panel after an interview.
    pub attrition: f64,
    /// Extra leaving probability after an eligible wave without take-up.
    pub attrition_non_takeup: f64,
    pub income: IncomeProcess,
    /// Intercept `a` of the receipt index outside interviews.
    pub history_intercept: f64,
    /// Slope `b` on the relative income gap of that index.
    pub history_gap: f64,
    /// Loading `c` of the household effect in that index.
    pub history_nu_loading: f64,
    /// Administrative receipt probability of a simulated-ineligible
    /// household at the interview.
    pub ineligible_receipt_rate: f64,
    /// Probability that actual receipt is reported as none.
    pub underreport_rate: f64,
    /// Probability that non-receipt is reported as receipt.
    pub overreport_rate: f64,
    /// Probability of each selection-relevant data defect.
    pub defect_rate: f64,
    pub montecarlo: MonteCarloConfig,
}

impl Default for SyntheticDgp {
    fn default() -> Self {
        let beta = [
            ("intercept", -0.2),
            ("relative_income_gap", 1.5),
            ("relative_income_gap_sq", -0.5),
            ("female_head", 0.3),
            ("east", -0.25),
            ("home_owner", -0.4),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        SyntheticDgp {
            seed: 20_240_601,
            households: 500,
            waves: 5,
            first_year: 2015,
            sigma_nu: 1.0,
            beta,
            attrition: 0.0,
            attrition_non_takeup: 0.0,
            income: IncomeProcess::default(),
            history_intercept: -0.3,
            history_gap: 1.5,
            history_nu_loading: 1.0,
            ineligible_receipt_rate: 0.0,
            underreport_rate: 0.0,
            overreport_rate: 0.0,
            defect_rate: 0.0,
            montecarlo: MonteCarloConfig::default(),
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InputValidation(format!("{name} must lie in [0,1], got {v}")))
    }
}

impl SyntheticDgp {
    pub fn last_year(&self) -> i32 {
        self.first_year + self.waves as i32 - 1
    }

    pub fn wave_years(&self) -> Vec<i32> {
        (self.first_year..=self.last_year()).collect()
    }

    /// Layout over every block; the take-up index is evaluated on it.
    pub fn truth_layout(&self) -> DesignLayout {
        DesignLayout::new(&ModelTag::M3.spec(), self.wave_years())
    }

    pub fn validate(&self) -> Result<()> {
        if self.waves == 0 {
            return Err(Error::InputValidation("at least one wave is required".into()));
        }
        if self.households == 0 {
            return Err(Error::InputValidation("at least one household is required".into()));
        }
        if !(self.sigma_nu >= 0.0 && self.sigma_nu.is_finite()) {
            return Err(Error::InputValidation("sigma_nu must be non-negative".into()));
        }
        for (name, v) in [
            ("attrition", self.attrition),
            ("attrition_non_takeup", self.attrition_non_takeup),
            ("ineligible_receipt_rate", self.ineligible_receipt_rate),
            ("underreport_rate", self.underreport_rate),
            ("overreport_rate", self.overreport_rate),
            ("defect_rate", self.defect_rate),
            ("job_keep", self.income.job_keep),
            ("job_find", self.income.job_find),
        ] {
            check_rate(name, v)?;
        }
        if !(self.income.persistence > -1.0 && self.income.persistence < 1.0) {
            return Err(Error::InputValidation("persistence must lie in (-1,1)".into()));
        }
        if ![self.history_intercept, self.history_gap, self.history_nu_loading].iter().all(|v| v.is_finite()) {
            return Err(Error::InputValidation("history receipt index must be finite".into()));
        }
        if !(self.income.innovation_sd >= 0.0) {
            return Err(Error::InputValidation("innovation_sd must be non-negative".into()));
        }
        let layout = self.truth_layout();
        for (name, v) in &self.beta {
            if layout.column_index(name).is_none() {
                return Err(Error::Configuration(format!("unknown coefficient `{name}`")));
            }
            if !v.is_finite() {
                return Err(Error::InputValidation(format!("coefficient `{name}` is not finite")));
            }
        }
        if self.montecarlo.replications == 0 {
            return Err(Error::InputValidation("at least one replication is required".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let dgp: SyntheticDgp =
            toml::from_str(text).map_err(|e| Error::Configuration(format!("generator config: {e}")))?;
        dgp.validate()?;
        Ok(dgp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("generator config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_validation() {
        let d = SyntheticDgp::default();
        d.validate().unwrap();
        let back = SyntheticDgp::from_toml_str(&d.to_toml_string()).unwrap();
        assert_eq!(back, d);
        let partial = SyntheticDgp::from_toml_str("households = 10\n[beta]\nintercept = 0.5\n").unwrap();
        assert_eq!(partial.households, 10);
        assert_eq!(partial.beta.len(), 1);
        assert!(matches!(SyntheticDgp::from_toml_str("waves = 0"), Err(Error::InputValidation(_))));
        assert!(matches!(
            SyntheticDgp::from_toml_str("[beta]\nnonsense = 1.0"),
            Err(Error::Configuration(_))
        ));
        assert!(SyntheticDgp::from_toml_str("bogus_key = 1").is_err());
    }
}
