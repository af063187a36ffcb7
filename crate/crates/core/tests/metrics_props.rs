use std::collections::BTreeMap;

use proptest::prelude::*;
use takeup_core::metrics::{
    ber, net_underreporting, ntr, rate_table, takeup_types, Grouping, MetricsRow, Receipt,
};
use takeup_core::rules::SampleOrigin;

fn arb_row() -> impl Strategy<Value = MetricsRow> {
    (0u64..8, 2018i32..2021, 0.1f64..5.0, any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), 0u8..3)
        .prop_map(|(id, year, weight, eligible, reported, admin, genpop, level)| MetricsRow {
            household_id: id,
            wave_year: year,
            weight,
            sample: if genpop { SampleOrigin::GenPop } else { SampleOrigin::Admin },
            eligible,
            reported_receipt: reported,
            admin_receipt: admin,
            relative_income_gap: 0.5,
            entitlement: 100.0,
            reported_income: 1000.0,
            simulated_income: 1000.0,
            subgroups: BTreeMap::from([("level".to_string(), level.to_string())]),
        })
}

fn rows() -> impl Strategy<Value = Vec<MetricsRow>> {
    proptest::collection::vec(arb_row(), 1..40)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rates_ignore_uniform_weight_scaling(rows in rows(), c in 0.01f64..100.0) {
        let scaled: Vec<MetricsRow> = rows.iter().cloned().map(|mut r| { r.weight *= c; r }).collect();
        for receipt in [Receipt::Reported, Receipt::Administrative] {
            match (ntr(&rows, receipt, true), ntr(&scaled, receipt, true)) {
                (Ok(a), Ok(b)) => prop_assert!(close(a, b)),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
            match (ber(&rows, receipt, true), ber(&scaled, receipt, true)) {
                (Ok(a), Ok(b)) => prop_assert!(close(a, b)),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }

    #[test]
    fn correction_shifts_ntr_by_net_underreporting(rows in rows(), weighted in any::<bool>()) {
        prop_assume!(rows.iter().any(|r| r.eligible));
        let u = ntr(&rows, Receipt::Reported, weighted).unwrap();
        let c = ntr(&rows, Receipt::Administrative, weighted).unwrap();
        let d = net_underreporting(&rows, weighted).unwrap();
        prop_assert!(close(c, u - d), "{c} vs {u} - {d}");
    }

    #[test]
    fn table_cells_match_direct_rates(rows in rows(), weighted in any::<bool>()) {
        let pct = |r: takeup_core::Result<f64>| r.ok().map(|v| 100.0 * v);
        for grouping in [Grouping::Year, Grouping::Sample, Grouping::Variable("level".into())] {
            let table = rate_table(&rows, grouping.clone(), weighted);
            for cell in &table.rows {
                let subset: Vec<MetricsRow> = rows
                    .iter()
                    .filter(|r| match &grouping {
                        _ if cell.label == "total" => true,
                        Grouping::Year => r.wave_year.to_string() == cell.label,
                        Grouping::Sample => (if r.sample == SampleOrigin::GenPop { "genpop" } else { "admin" }) == cell.label,
                        Grouping::Variable(v) => format!("{v}={}", r.subgroups[v]) == cell.label,
                        Grouping::Total => true,
                    })
                    .cloned()
                    .collect();
                prop_assert_eq!(cell.n_rows, subset.len());
                prop_assert_eq!(cell.ntr_uncorrected, pct(ntr(&subset, Receipt::Reported, weighted)));
                prop_assert_eq!(cell.ntr_corrected, pct(ntr(&subset, Receipt::Administrative, weighted)));
                prop_assert_eq!(cell.ber_uncorrected, pct(ber(&subset, Receipt::Reported, weighted)));
                prop_assert_eq!(cell.ber_corrected, pct(ber(&subset, Receipt::Administrative, weighted)));
            }
        }
    }

    #[test]
    fn takeup_types_partition(rows in rows()) {
        let t = takeup_types(&rows);
        let cells = [t.never, t.sometimes, t.always];
        if cells.iter().any(|c| c.households > 0) {
            let s: f64 = cells.iter().map(|c| c.share.unwrap_or(0.0)).sum();
            let w: f64 = cells.iter().map(|c| c.weighted_share.unwrap_or(0.0)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!((w - 1.0).abs() < 1e-12);
        }
    }
}
