//! Daily administrative spells and their quarter-aligned aggregates.
//!
//! Spells carry inclusive end dates and are counted in actual calendar
//! days. Household receipt counts a day once if any member has a UB II
//! spell on it. Quarters without any record contribute zero receipt and
//! zero income.

mod covariates;
mod quarter;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

pub use covariates::{
    build_covariates, correct_receipt, covariates_from_history, income_shock, income_volatility,
    real_equivalised_income, Correction, Deflator, LongTermCovariates, QuarterlySeries,
    HISTORY_QUARTERS,
};
pub use quarter::Quarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpellKind {
    UbiiReceipt,
    Employment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellRecord {
    pub person_id: u64,
    pub household_id: u64,
    pub kind: SpellKind,
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
    /// Employment spells only; zero for receipt spells.
    pub monthly_gross_wage: Money,
}

impl SpellRecord {
    pub fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::InputValidation(format!(
                "spell of person {} ends before it starts",
                self.person_id
            )));
        }
        if self.monthly_gross_wage.is_negative() {
            return Err(Error::InputValidation(format!(
                "spell of person {} has a negative wage",
                self.person_id
            )));
        }
        if self.kind == SpellKind::UbiiReceipt && self.monthly_gross_wage != Money::ZERO {
            return Err(Error::InputValidation(format!(
                "receipt spell of person {} carries a wage",
                self.person_id
            )));
        }
        Ok(())
    }

    /// Days of this spell inside `[from, to]`, both inclusive.
    pub fn overlap_days(&self, from: NaiveDate, to: NaiveDate) -> i64 {
        let lo = self.start.max(from);
        let hi = self.end.min(to);
        if lo > hi {
            0
        } else {
            (hi - lo).num_days() + 1
        }
    }
}

/// Integer day aggregates for a run of consecutive quarters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarterlyHistory {
    pub first: Quarter,
    /// Days per quarter with household UB II receipt.
    pub receipt_days: Vec<i64>,
    /// Sum over employment spells of wage (cents) times days employed.
    pub wage_cent_days: Vec<i64>,
}

impl QuarterlyHistory {
    pub fn empty(first: Quarter, len: usize) -> Self {
        QuarterlyHistory {
            first,
            receipt_days: vec![0; len],
            wage_cent_days: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.receipt_days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.receipt_days.is_empty()
    }

    fn slot(&self, q: Quarter) -> Option<usize> {
        let offset = q.index() - self.first.index();
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    pub fn receipt_days_in(&self, q: Quarter) -> i64 {
        self.slot(q).map(|i| self.receipt_days[i]).unwrap_or(0)
    }

    pub fn wage_cent_days_in(&self, q: Quarter) -> i64 {
        self.slot(q).map(|i| self.wage_cent_days[i]).unwrap_or(0)
    }

    /// Share of days with receipt over the four quarters making up lag year
    /// `lag` (1, 2 or 3) before `interview`.
    pub fn receipt_share(&self, interview: Quarter, lag: u32) -> f64 {
        let (covered, total) = lag_window(interview, lag)
            .map(|q| (self.receipt_days_in(q), q.days()))
            .fold((0, 0), |(c, t), (dc, dt)| (c + dc, t + dt));
        covered as f64 / total as f64
    }
}

/// The four quarters `t - 4*lag ..= t - 4*(lag-1) - 1`.
pub fn lag_window(interview: Quarter, lag: u32) -> impl Iterator<Item = Quarter> {
    assert!((1..=3).contains(&lag), "lag year must be 1, 2 or 3");
    let lag = lag as i32;
    (4 * (lag - 1) + 1..=4 * lag).rev().map(move |k| interview.offset(-k))
}

/// Spells grouped by household.
#[derive(Debug, Clone, Default)]
pub struct SpellIndex {
    by_household: BTreeMap<u64, Vec<SpellRecord>>,
}

impl SpellIndex {
    pub fn new(spells: impl IntoIterator<Item = SpellRecord>) -> Result<Self> {
        let mut by_household: BTreeMap<u64, Vec<SpellRecord>> = BTreeMap::new();
        for s in spells {
            s.validate()?;
            by_household.entry(s.household_id).or_default().push(s);
        }
        for v in by_household.values_mut() {
            v.sort_by_key(|s| (s.start, s.end, s.person_id, s.kind));
        }
        Ok(SpellIndex { by_household })
    }

    pub fn household(&self, household_id: u64) -> &[SpellRecord] {
        self.by_household
            .get(&household_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn households(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_household.keys().copied()
    }

    /// Days in `[from, to]` on which any member of the household is in
    /// UB II receipt.
    pub fn covered_days(&self, household_id: u64, from: NaiveDate, to: NaiveDate) -> i64 {
        let mut intervals: Vec<(NaiveDate, NaiveDate)> = self
            .household(household_id)
            .iter()
            .filter(|s| s.kind == SpellKind::UbiiReceipt)
            .filter_map(|s| {
                let lo = s.start.max(from);
                let hi = s.end.min(to);
                (lo <= hi).then_some((lo, hi))
            })
            .collect();
        intervals.sort();
        let mut total = 0;
        let mut current: Option<(NaiveDate, NaiveDate)> = None;
        for (lo, hi) in intervals {
            match current {
                Some((clo, chi)) if lo <= chi.succ_opt().unwrap_or(chi) => {
                    current = Some((clo, chi.max(hi)));
                }
                Some((clo, chi)) => {
                    total += (chi - clo).num_days() + 1;
                    current = Some((lo, hi));
                }
                None => current = Some((lo, hi)),
            }
        }
        if let Some((clo, chi)) = current {
            total += (chi - clo).num_days() + 1;
        }
        total
    }

    pub fn wage_cent_days(&self, household_id: u64, from: NaiveDate, to: NaiveDate) -> i64 {
        self.household(household_id)
            .iter()
            .filter(|s| s.kind == SpellKind::Employment)
            .map(|s| s.monthly_gross_wage.cents() * s.overlap_days(from, to))
            .sum()
    }

    pub fn receipt_on(&self, household_id: u64, date: NaiveDate) -> bool {
        self.household(household_id)
            .iter()
            .any(|s| s.kind == SpellKind::UbiiReceipt && s.start <= date && date <= s.end)
    }

    pub fn history(&self, household_id: u64, first: Quarter, len: usize) -> QuarterlyHistory {
        let mut h = QuarterlyHistory::empty(first, len);
        for i in 0..len {
            let q = first.offset(i as i32);
            h.receipt_days[i] = self.covered_days(household_id, q.first_day(), q.last_day());
            h.wage_cent_days[i] = self.wage_cent_days(household_id, q.first_day(), q.last_day());
        }
        h
    }

    pub fn receipt_share(&self, household_id: u64, interview: Quarter, lag: u32) -> f64 {
        let first = interview.offset(-(4 * lag as i32));
        self.history(household_id, first, 4).receipt_share(interview, lag)
    }

    /// Average monthly household earnings in `quarter`, in 2020 prices and
    /// divided by the equivalence weight.
    pub fn quarterly_income(
        &self,
        household_id: u64,
        quarter: Quarter,
        deflator: &Deflator,
        equivalence_weight: f64,
    ) -> Result<f64> {
        let cpi = deflator.get(quarter.year())?;
        let wd = self.wage_cent_days(household_id, quarter.first_day(), quarter.last_day());
        Ok(real_equivalised_income(wd, quarter.days(), cpi, equivalence_weight))
    }
}
