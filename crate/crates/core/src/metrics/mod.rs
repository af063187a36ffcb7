//! Non-take-up and beta-error rates and the descriptive tables built on
//! them.
//!
//! Every rate exists in two flavours: *uncorrected*, using survey-reported
//! receipt, and *corrected*, using the administrative record. Weighting is a
//! flag; unweighted rates give every row weight one.

mod curve;
mod means;
mod quality;
mod tables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::SampleOrigin;

pub use curve::{gap_curve, GapBins, GapCategory, GapCurve, QuadraticFit};
pub use means::{covariate_means, covariate_means_from_observations, MeanRow};
pub use quality::{kde, sim_quality, summarize, Density, QualityCell, SimQuality, Summary};
pub use tables::{rate_table, subgroup_variables, takeup_types, Grouping, RateRow, RateTable, TakeupTypes, TypeCell};

/// One household-wave as seen by the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub household_id: u64,
    pub wave_year: i32,
    pub weight: f64,
    pub sample: SampleOrigin,
    /// Simulated UB II eligibility.
    pub eligible: bool,
    pub reported_receipt: bool,
    pub admin_receipt: bool,
    pub relative_income_gap: f64,
    /// Real equivalised monthly amounts.
    pub entitlement: f64,
    pub reported_income: f64,
    pub simulated_income: f64,
    /// Grouping variable name to level.
    pub subgroups: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receipt {
    /// Survey-reported (uncorrected).
    Reported,
    /// Administrative record (corrected).
    Administrative,
}

impl MetricsRow {
    pub fn receipt(&self, r: Receipt) -> bool {
        match r {
            Receipt::Reported => self.reported_receipt,
            Receipt::Administrative => self.admin_receipt,
        }
    }

    pub fn w(&self, weighted: bool) -> f64 {
        if weighted {
            self.weight
        } else {
            1.0
        }
    }
}

/// Eligible mass not receiving over eligible mass.
pub fn ntr(rows: &[MetricsRow], receipt: Receipt, weighted: bool) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows.iter().filter(|r| r.eligible) {
        let w = r.w(weighted);
        den += w;
        if !r.receipt(receipt) {
            num += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedRate("no eligible mass"))
    }
}

/// Ineligible recipients' mass over recipients' mass.
pub fn ber(rows: &[MetricsRow], receipt: Receipt, weighted: bool) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows.iter().filter(|r| r.receipt(receipt)) {
        let w = r.w(weighted);
        den += w;
        if !r.eligible {
            num += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedRate("no receipt mass"))
    }
}

/// Eligible underreporting minus overreporting, as a share of the eligible
/// mass. Corrected NTR equals uncorrected NTR minus this.
pub fn net_underreporting(rows: &[MetricsRow], weighted: bool) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows.iter().filter(|r| r.eligible) {
        let w = r.w(weighted);
        den += w;
        match (r.reported_receipt, r.admin_receipt) {
            (false, true) => num += w,
            (true, false) => num -= w,
            _ => {}
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedRate("no eligible mass"))
    }
}


#[cfg(test)]
mod tests {
    use super::testing::row;
    use super::*;

    #[test]
    fn ntr_examples() {
        let rows: Vec<_> = (0..10).map(|i| row(i, 2020, 1.0, true, i >= 4, i >= 4)).collect();
        assert_eq!(ntr(&rows, Receipt::Administrative, false).unwrap(), 0.4);
        let rows: Vec<_> = (0..10)
            .map(|i| row(i, 2020, if i < 4 { 2.0 } else { 1.0 }, true, i >= 4, i >= 4))
            .collect();
        assert_eq!(ntr(&rows, Receipt::Administrative, true).unwrap(), 8.0 / 14.0);
        let all: Vec<_> = (0..3).map(|i| row(i, 2020, 1.0, true, true, true)).collect();
        assert_eq!(ntr(&all, Receipt::Reported, true).unwrap(), 0.0);
        assert!(matches!(ntr(&[], Receipt::Reported, true), Err(Error::UndefinedRate(_))));
    }

    #[test]
    fn ber_examples() {
        let rows: Vec<_> = (0..8).map(|i| row(i, 2020, 1.0, i != 0, true, true)).collect();
        assert_eq!(ber(&rows, Receipt::Reported, false).unwrap(), 0.125);
        let rows: Vec<_> = (0..8).map(|i| row(i, 2020, 1.0, true, true, true)).collect();
        assert_eq!(ber(&rows, Receipt::Administrative, false).unwrap(), 0.0);
        let none: Vec<_> = (0..3).map(|i| row(i, 2020, 1.0, true, false, false)).collect();
        assert!(ber(&none, Receipt::Administrative, false).is_err());
    }

    #[test]
    fn correction_identity() {
        let rows = vec![
            row(1, 2020, 1.5, true, false, true),
            row(2, 2020, 0.5, true, true, false),
            row(3, 2020, 2.0, true, false, false),
            row(4, 2020, 1.0, true, false, true),
            row(5, 2020, 1.0, false, true, true),
        ];
        let unc = ntr(&rows, Receipt::Reported, true).unwrap();
        let cor = ntr(&rows, Receipt::Administrative, true).unwrap();
        let net = net_underreporting(&rows, true).unwrap();
        assert!((cor - (unc - net)).abs() < 1e-15);
        assert!(cor < unc);
    }
}
