use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{lag_window, Quarter, QuarterlyHistory, SpellIndex};
use crate::error::{Error, Result};
use crate::money::Money;
use crate::rules::{HouseholdSnapshot, PolicySet};

/// Quarters of history needed before an interview quarter.
pub const HISTORY_QUARTERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LongTermCovariates {
    pub receipt_share_lag1: f64,
    pub receipt_share_lag2: f64,
    pub receipt_share_lag3: f64,
    /// Real equivalised monthly earnings, averaged over the lag year.
    pub income_lag1: f64,
    pub income_lag2: f64,
    pub income_lag3: f64,
    pub income_shock: f64,
    pub income_volatility: f64,
}

impl LongTermCovariates {
    pub fn is_finite(&self) -> bool {
        [
            self.receipt_share_lag1,
            self.receipt_share_lag2,
            self.receipt_share_lag3,
            self.income_lag1,
            self.income_lag2,
            self.income_lag3,
            self.income_shock,
            self.income_volatility,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// CPI by calendar year, 2020 = 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Deflator {
    cpi: BTreeMap<i32, f64>,
}

impl Deflator {
    pub fn new(cpi: impl IntoIterator<Item = (i32, f64)>) -> Self {
        Deflator {
            cpi: cpi.into_iter().collect(),
        }
    }

    pub fn from_policies(policies: &PolicySet) -> Self {
        Deflator::new(
            policies
                .years()
                .map(|y| (y, policies.cpi(y).expect("year listed by the set"))),
        )
    }

    pub fn get(&self, year: i32) -> Result<f64> {
        self.cpi
            .get(&year)
            .copied()
            .ok_or_else(|| Error::Configuration(format!("no deflator for year {year}")))
    }
}

/// Monthly real equivalised earnings from the exact wage-day sum of a
/// quarter. Every code path producing quarterly income goes through here.
pub fn real_equivalised_income(wage_cent_days: i64, quarter_days: i64, cpi: f64, equivalence_weight: f64) -> f64 {
    (wage_cent_days as f64 / quarter_days as f64) / 100.0 / cpi / equivalence_weight
}

/// Quarterly values starting at `first`; quarters outside the stored range
/// read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlySeries {
    pub first: Quarter,
    pub values: Vec<f64>,
}

impl QuarterlySeries {
    pub fn value(&self, q: Quarter) -> f64 {
        let offset = q.index() - self.first.index();
        if offset < 0 {
            return 0.0;
        }
        self.values.get(offset as usize).copied().unwrap_or(0.0)
    }
}

/// Year-over-year change in household earnings, in units of the annual
/// UB II need. The series holds monthly rates per quarter, so a quarter's
/// total is three times its value.
pub fn income_shock(series: &QuarterlySeries, interview: Quarter, current_need: f64) -> Result<f64> {
    if !(current_need > 0.0) {
        return Err(Error::Domain(format!(
            "income shock needs a positive current need, got {current_need}"
        )));
    }
    let recent: f64 = (1..=4).map(|k| series.value(interview.offset(-k))).sum();
    let prior: f64 = (5..=8).map(|k| series.value(interview.offset(-k))).sum();
    Ok(3.0 * (recent - prior) / (12.0 * current_need))
}

/// Population standard deviation over the twelve quarters before the
/// interview.
pub fn income_volatility(series: &QuarterlySeries, interview: Quarter) -> f64 {
    let values: Vec<f64> = (1..=12).map(|k| series.value(interview.offset(-k))).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

pub fn covariates_from_history(
    history: &QuarterlyHistory,
    interview: Quarter,
    equivalence_weight: f64,
    deflator: &Deflator,
    current_need: Money,
) -> Result<LongTermCovariates> {
    let first = interview.offset(-(HISTORY_QUARTERS as i32));
    let quarters: Vec<Quarter> = (0..HISTORY_QUARTERS as i32).map(|i| first.offset(i)).collect();
    let mut real = Vec::with_capacity(HISTORY_QUARTERS);
    let mut nominal = Vec::with_capacity(HISTORY_QUARTERS);
    for &q in &quarters {
        let wcd = history.wage_cent_days_in(q);
        let cpi = deflator.get(q.year())?;
        real.push(real_equivalised_income(wcd, q.days(), cpi, equivalence_weight));
        nominal.push(real_equivalised_income(wcd, q.days(), 1.0, 1.0));
    }
    let real = QuarterlySeries { first, values: real };
    let nominal = QuarterlySeries { first, values: nominal };
    let lag_mean = |lag: u32| lag_window(interview, lag).map(|q| real.value(q)).sum::<f64>() / 4.0;

    Ok(LongTermCovariates {
        receipt_share_lag1: history.receipt_share(interview, 1),
        receipt_share_lag2: history.receipt_share(interview, 2),
        receipt_share_lag3: history.receipt_share(interview, 3),
        income_lag1: lag_mean(1),
        income_lag2: lag_mean(2),
        income_lag3: lag_mean(3),
        income_shock: income_shock(&nominal, interview, current_need.euros())?,
        income_volatility: income_volatility(&real, interview),
    })
}

/// Long-term covariates of one snapshot from the household's spells.
pub fn build_covariates(
    index: &SpellIndex,
    hh: &HouseholdSnapshot,
    current_need: Money,
    deflator: &Deflator,
) -> Result<LongTermCovariates> {
    let interview = hh.interview_quarter();
    let first = interview.offset(-(HISTORY_QUARTERS as i32));
    let history = index.history(hh.household_id, first, HISTORY_QUARTERS);
    covariates_from_history(&history, interview, hh.equivalence_weight(), deflator, current_need)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    None,
    Underreport,
    Overreport,
}

/// Replaces reported receipt with the administrative record.
pub fn correct_receipt(reported: bool, admin: bool) -> (bool, Correction) {
    let kind = match (reported, admin) {
        (false, true) => Correction::Underreport,
        (true, false) => Correction::Overreport,
        _ => Correction::None,
    };
    (admin, kind)
}
