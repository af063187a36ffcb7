use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// Standard rate for children younger than `below_age`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildRate {
    pub below_age: u32,
    pub rate: Money,
}

/// Share of gross earnings between `lower` and `upper` that is kept out of
/// the means test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionBracket {
    pub lower: Money,
    pub upper: Money,
    pub retained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarningsDisregard {
    /// Earnings up to this amount are disregarded in full.
    pub base: Money,
    pub brackets: Vec<RetentionBracket>,
}

impl EarningsDisregard {
    pub fn evaluate(&self, gross: Money) -> Money {
        let g = gross.cents() as f64;
        let mut cents = g.min(self.base.cents() as f64);
        for b in &self.brackets {
            cents += b.retained * overlap(g, b.lower.cents() as f64, b.upper.cents() as f64);
        }
        Money::from_cents(cents.round() as i64)
    }
}

/// Marginal net rate applying to gross earnings at or above `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetIncomeSegment {
    pub from: Money,
    pub rate: f64,
}

/// Continuous piecewise-linear gross-to-net mapping with `net(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetIncomeFunction {
    pub segments: Vec<NetIncomeSegment>,
}

impl NetIncomeFunction {
    pub fn evaluate(&self, gross: Money) -> Money {
        let g = gross.cents() as f64;
        let mut cents = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let upper = self
                .segments
                .get(k + 1)
                .map(|s| s.from.cents() as f64)
                .unwrap_or(f64::INFINITY);
            cents += seg.rate * overlap(g, seg.from.cents() as f64, upper);
        }
        Money::from_cents(cents.round() as i64)
    }
}

/// Notional housing benefit: a share of the recognized rent net of heating,
/// withdrawn linearly in countable income.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HousingBenefitSchedule {
    pub rent_coverage: f64,
    pub income_withdrawal: f64,
}

/// Supplementary child benefit: flat amount per child, payable from a
/// minimum income and phased out linearly above `phase_out_start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildSupplementSchedule {
    pub per_child: Money,
    pub min_income: Money,
    pub phase_out_start: Money,
    pub phase_out_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyYearParameters {
    pub year: i32,
    pub standard_rate_single: Money,
    /// Per partner in a couple.
    pub standard_rate_partner: Money,
    pub standard_rate_child_by_age: Vec<ChildRate>,
    /// Fraction of the single standard rate added for single parents.
    pub single_parent_supplement_share: f64,
    pub rent_cap_per_sqm: Money,
    pub heating_share: f64,
    pub earnings_disregard: EarningsDisregard,
    pub net_income_function: NetIncomeFunction,
    pub wealth_threshold_base: Money,
    pub wealth_threshold_per_child: Money,
    pub hb_coverage_factor: f64,
    pub hb_schedule: HousingBenefitSchedule,
    pub scb_schedule: ChildSupplementSchedule,
    /// Consumer price index relative to 2020.
    pub cpi_index: f64,
}

fn overlap(x: f64, lower: f64, upper: f64) -> f64 {
    (x.min(upper) - lower).max(0.0)
}

pub const DEFAULT_RENT_CAP_EUR_PER_SQM: i64 = 15;
pub const DEFAULT_HEATING_SHARE: f64 = 0.19;
pub const DEFAULT_HB_COVERAGE_FACTOR: f64 = 0.8;

/// Built-in schedule of the earnings disregard: 100 in full, 20 % of
/// 100-1000 and 10 % of 1000-1200.
pub fn default_earnings_disregard() -> EarningsDisregard {
    EarningsDisregard {
        base: Money::from_euros(100),
        brackets: vec![
            RetentionBracket {
                lower: Money::from_euros(100),
                upper: Money::from_euros(1000),
                retained: 0.2,
            },
            RetentionBracket {
                lower: Money::from_euros(1000),
                upper: Money::from_euros(1200),
                retained: 0.1,
            },
        ],
    }
}

impl PolicyYearParameters {
    /// Parameters for `year`, obtained by indexing a 2020 base at 1.5 % a
    /// year. The rent cap, heating share and coverage factor stay fixed.
    pub fn indexed_default(year: i32) -> Self {
        let cpi = 1.015_f64.powi(year - 2020);
        let idx = |euros: f64| Money::from_euros_f64(euros * cpi);
        PolicyYearParameters {
            year,
            standard_rate_single: idx(432.0),
            standard_rate_partner: idx(389.0),
            standard_rate_child_by_age: vec![
                ChildRate { below_age: 6, rate: idx(250.0) },
                ChildRate { below_age: 14, rate: idx(308.0) },
                ChildRate { below_age: 18, rate: idx(328.0) },
                ChildRate { below_age: 25, rate: idx(345.0) },
            ],
            single_parent_supplement_share: 0.36,
            rent_cap_per_sqm: Money::from_euros(DEFAULT_RENT_CAP_EUR_PER_SQM),
            heating_share: DEFAULT_HEATING_SHARE,
            earnings_disregard: default_earnings_disregard(),
            net_income_function: NetIncomeFunction {
                segments: vec![
                    NetIncomeSegment { from: Money::ZERO, rate: 1.0 },
                    NetIncomeSegment { from: idx(520.0), rate: 0.79 },
                    NetIncomeSegment { from: idx(2000.0), rate: 0.62 },
                ],
            },
            wealth_threshold_base: idx(15000.0),
            wealth_threshold_per_child: idx(750.0),
            hb_coverage_factor: DEFAULT_HB_COVERAGE_FACTOR,
            hb_schedule: HousingBenefitSchedule {
                rent_coverage: 0.6,
                income_withdrawal: 0.3,
            },
            scb_schedule: ChildSupplementSchedule {
                per_child: idx(185.0),
                min_income: idx(600.0),
                phase_out_start: idx(1500.0),
                phase_out_rate: 0.45,
            },
            cpi_index: cpi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Configuration(format!("policy year {}: {msg}", self.year)));
        let amounts = [
            ("standard_rate_single", self.standard_rate_single),
            ("standard_rate_partner", self.standard_rate_partner),
            ("rent_cap_per_sqm", self.rent_cap_per_sqm),
            ("wealth_threshold_base", self.wealth_threshold_base),
            ("wealth_threshold_per_child", self.wealth_threshold_per_child),
            ("earnings_disregard.base", self.earnings_disregard.base),
            ("scb_schedule.per_child", self.scb_schedule.per_child),
            ("scb_schedule.min_income", self.scb_schedule.min_income),
            ("scb_schedule.phase_out_start", self.scb_schedule.phase_out_start),
        ];
        for (name, amount) in amounts {
            if amount.is_negative() {
                return err(format!("{name} is negative"));
            }
        }
        if !(self.heating_share > 0.0 && self.heating_share < 1.0) {
            return err(format!("heating_share {} outside (0,1)", self.heating_share));
        }
        if !(self.hb_coverage_factor > 0.0 && self.hb_coverage_factor <= 1.0) {
            return err(format!("hb_coverage_factor {} outside (0,1]", self.hb_coverage_factor));
        }
        if !(self.cpi_index > 0.0 && self.cpi_index.is_finite()) {
            return err(format!("cpi_index {} must be positive", self.cpi_index));
        }
        if self.single_parent_supplement_share < 0.0 {
            return err("single_parent_supplement_share is negative".into());
        }
        if self.standard_rate_child_by_age.is_empty() {
            return err("standard_rate_child_by_age is empty".into());
        }
        for pair in self.standard_rate_child_by_age.windows(2) {
            if pair[1].below_age <= pair[0].below_age {
                return err("child age brackets not strictly increasing".into());
            }
        }
        for c in &self.standard_rate_child_by_age {
            if c.rate.is_negative() {
                return err("negative child standard rate".into());
            }
        }
        let mut last_upper = self.earnings_disregard.base;
        for b in &self.earnings_disregard.brackets {
            if b.lower >= b.upper || b.lower < last_upper {
                return err("disregard brackets not strictly increasing".into());
            }
            if !(0.0..=1.0).contains(&b.retained) {
                return err(format!("retained fraction {} outside [0,1]", b.retained));
            }
            last_upper = b.upper;
        }
        let segs = &self.net_income_function.segments;
        if segs.first().map(|s| s.from) != Some(Money::ZERO) {
            return err("net income function must start at 0".into());
        }
        for pair in segs.windows(2) {
            if pair[1].from <= pair[0].from {
                return err("net income breakpoints not strictly increasing".into());
            }
        }
        if segs.iter().any(|s| !(s.rate >= 0.0 && s.rate.is_finite())) {
            return err("net income function must be non-decreasing".into());
        }
        let hb = &self.hb_schedule;
        if hb.rent_coverage < 0.0 || hb.income_withdrawal < 0.0 {
            return err("negative housing benefit schedule parameter".into());
        }
        if self.scb_schedule.phase_out_rate < 0.0 {
            return err("negative child supplement phase-out rate".into());
        }
        Ok(())
    }

    pub fn wealth_threshold(&self, adults: usize, children: usize) -> Money {
        self.wealth_threshold_base * adults as i64 + self.wealth_threshold_per_child * children as i64
    }

    pub fn child_rate(&self, age: u32) -> Money {
        self.standard_rate_child_by_age
            .iter()
            .find(|c| age < c.below_age)
            .or(self.standard_rate_child_by_age.last())
            .map(|c| c.rate)
            .unwrap_or(Money::ZERO)
    }
}

/// Parameters for every simulated calendar year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicySet {
    years: BTreeMap<i32, PolicyYearParameters>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    policy: Vec<PolicyYearParameters>,
}

impl PolicySet {
    pub fn new(params: impl IntoIterator<Item = PolicyYearParameters>) -> Result<Self> {
        let mut years = BTreeMap::new();
        for p in params {
            p.validate()?;
            let year = p.year;
            if years.insert(year, p).is_some() {
                return Err(Error::Configuration(format!("duplicate policy year {year}")));
            }
        }
        Ok(PolicySet { years })
    }

    pub fn indexed_default(years: impl IntoIterator<Item = i32>) -> Self {
        PolicySet {
            years: years
                .into_iter()
                .map(|y| (y, PolicyYearParameters::indexed_default(y)))
                .collect(),
        }
    }

    pub fn get(&self, year: i32) -> Result<&PolicyYearParameters> {
        self.years.get(&year).ok_or(Error::MissingPolicyYear(year))
    }

    pub fn cpi(&self, year: i32) -> Result<f64> {
        self.get(year).map(|p| p.cpi_index)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.years.keys().copied()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: PolicyFile =
            toml::from_str(text).map_err(|e| Error::Configuration(format!("policy file: {e}")))?;
        Self::new(file.policy)
    }

    pub fn to_toml_string(&self) -> String {
        let file = PolicyFile {
            policy: self.years.values().cloned().collect(),
        };
        toml::to_string(&file).expect("policy parameters serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
