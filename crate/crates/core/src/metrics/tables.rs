use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ber, ntr, MetricsRow, Receipt};
use crate::rules::SampleOrigin;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    Total,
    Year,
    Sample,
    /// A key of [`MetricsRow::subgroups`].
    Variable(String),
}

/// Rates in percent; `None` marks an empty cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub label: String,
    pub ntr_uncorrected: Option<f64>,
    pub ntr_corrected: Option<f64>,
    /// Corrected minus uncorrected NTR, percentage points.
    pub difference_pp: Option<f64>,
    pub ber_uncorrected: Option<f64>,
    pub ber_corrected: Option<f64>,
    pub n_rows: usize,
    pub n_eligible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub grouping: Grouping,
    pub weighted: bool,
    pub rows: Vec<RateRow>,
}

fn rate_row(label: String, rows: &[MetricsRow], weighted: bool) -> RateRow {
    let pct = |r: crate::Result<f64>| r.ok().map(|v| 100.0 * v);
    let nu = pct(ntr(rows, Receipt::Reported, weighted));
    let nc = pct(ntr(rows, Receipt::Administrative, weighted));
    RateRow {
        label,
        ntr_uncorrected: nu,
        ntr_corrected: nc,
        difference_pp: nu.zip(nc).map(|(u, c)| c - u),
        ber_uncorrected: pct(ber(rows, Receipt::Reported, weighted)),
        ber_corrected: pct(ber(rows, Receipt::Administrative, weighted)),
        n_rows: rows.len(),
        n_eligible: rows.iter().filter(|r| r.eligible).count(),
    }
}

fn sample_label(s: SampleOrigin) -> &'static str {
    match s {
        SampleOrigin::Admin => "admin",
        SampleOrigin::GenPop => "genpop",
        SampleOrigin::Refugee => "refugee",
    }
}

/// One row per cell of `grouping`, followed by a total row (except for
/// [`Grouping::Total`], which has only the total).
pub fn rate_table(rows: &[MetricsRow], grouping: Grouping, weighted: bool) -> RateTable {
    let mut cells: BTreeMap<String, Vec<MetricsRow>> = BTreeMap::new();
    match &grouping {
        Grouping::Total => {}
        Grouping::Year => {
            for r in rows {
                cells.entry(r.wave_year.to_string()).or_default().push(r.clone());
            }
        }
        Grouping::Sample => {
            // Both survey samples are always listed, even when empty.
            cells.entry("admin".into()).or_default();
            cells.entry("genpop".into()).or_default();
            for r in rows {
                cells.entry(sample_label(r.sample).into()).or_default().push(r.clone());
            }
        }
        Grouping::Variable(name) => {
            for r in rows {
                let level = r.subgroups.get(name).cloned().unwrap_or_else(|| "missing".into());
                cells.entry(format!("{name}={level}")).or_default().push(r.clone());
            }
        }
    }
    let mut out: Vec<RateRow> = cells.into_iter().map(|(label, rs)| rate_row(label, &rs, weighted)).collect();
    out.push(rate_row("total".into(), rows, weighted));
    RateTable {
        grouping,
        weighted,
        rows: out,
    }
}

/// Subgroup variable names present in `rows`.
pub fn subgroup_variables(rows: &[MetricsRow]) -> BTreeSet<String> {
    rows.iter().flat_map(|r| r.subgroups.keys().cloned()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeCell {
    pub households: usize,
    pub share: Option<f64>,
    pub weighted_share: Option<f64>,
}

/// Households classified over their eligible waves by administrative
/// receipt. A household's weight is the mean of its eligible-wave weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TakeupTypes {
    pub never: TypeCell,
    pub sometimes: TypeCell,
    pub always: TypeCell,
}

pub fn takeup_types(rows: &[MetricsRow]) -> TakeupTypes {
    // household -> (eligible waves, waves with receipt, weight sum)
    let mut hh: BTreeMap<u64, (usize, usize, f64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.eligible) {
        let e = hh.entry(r.household_id).or_insert((0, 0, 0.0));
        e.0 += 1;
        e.1 += usize::from(r.admin_receipt);
        e.2 += r.weight;
    }
    let mut counts = [0usize; 3];
    let mut mass = [0.0f64; 3];
    for (waves, claims, wsum) in hh.values() {
        let k = if *claims == 0 {
            0
        } else if claims == waves {
            2
        } else {
            1
        };
        counts[k] += 1;
        mass[k] += wsum / *waves as f64;
    }
    let n: usize = counts.iter().sum();
    let m: f64 = mass.iter().sum();
    let cell = |k: usize| TypeCell {
        households: counts[k],
        share: (n > 0).then(|| counts[k] as f64 / n as f64),
        weighted_share: (m > 0.0).then(|| mass[k] / m),
    };
    TakeupTypes {
        never: cell(0),
        sometimes: cell(1),
        always: cell(2),
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::row;
    use super::*;

    #[test]
    fn single_cell_equals_direct_rates() {
        let rows: Vec<_> = (0..6).map(|i| row(i, 2020, 1.0 + i as f64, i % 3 != 0, i % 2 == 0, i < 4)).collect();
        let t = rate_table(&rows, Grouping::Year, true);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(RateRow { label: "total".into(), ..t.rows[0].clone() }, t.rows[1]);
        assert_eq!(t.rows[1].ntr_corrected, Some(100.0 * ntr(&rows, Receipt::Administrative, true).unwrap()));
    }

    #[test]
    fn empty_cell_is_missing() {
        let rows = vec![row(1, 2020, 1.0, true, true, true)];
        let t = rate_table(&rows, Grouping::Sample, false);
        let genpop = t.rows.iter().find(|r| r.label == "genpop").unwrap();
        assert_eq!(genpop.ntr_corrected, None);
        assert_eq!(genpop.difference_pp, None);
    }

    #[test]
    fn typology() {
        let mut rows = Vec::new();
        for y in 0..3 {
            rows.push(row(1, 2020 + y, 1.0, true, true, true));
            rows.push(row(2, 2020 + y, 3.0, true, false, y == 0));
            rows.push(row(3, 2020 + y, 1.0, true, false, false));
            // Ineligible waves do not count.
            rows.push(row(4, 2020 + y, 1.0, y == 0, true, y != 0));
        }
        let t = takeup_types(&rows);
        assert_eq!((t.always.households, t.sometimes.households, t.never.households), (1, 1, 2));
        assert_eq!(t.sometimes.weighted_share, Some(0.5));
        let s = t.always.share.unwrap() + t.sometimes.share.unwrap() + t.never.share.unwrap();
        assert_eq!(s, 1.0);
    }
}
