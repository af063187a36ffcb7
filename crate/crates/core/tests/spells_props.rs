use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use takeup_core::spells::{covariates_from_history, lag_window, Deflator, Quarter, SpellIndex, SpellKind, SpellRecord};
use takeup_core::Money;

const HH: u64 = 7;

fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 1).unwrap()
}

fn day(offset: u64) -> NaiveDate {
    origin().checked_add_days(Days::new(offset)).unwrap()
}

fn arb_spell() -> impl Strategy<Value = SpellRecord> {
    (0u64..3, any::<bool>(), 0u64..3000, 0u64..500, 0i64..600_000).prop_map(|(person, receipt, start, len, wage)| {
        SpellRecord {
            person_id: person,
            household_id: HH,
            kind: if receipt { SpellKind::UbiiReceipt } else { SpellKind::Employment },
            start: day(start),
            end: day(start + len),
            monthly_gross_wage: if receipt { Money::ZERO } else { Money::from_cents(wage) },
        }
    })
}

fn arb_spells() -> impl Strategy<Value = Vec<SpellRecord>> {
    proptest::collection::vec(arb_spell(), 0..8)
}

fn arb_interview() -> impl Strategy<Value = Quarter> {
    (2016i32..2019, 1u8..=4).prop_map(|(y, q)| Quarter::new(y, q))
}

fn deflator() -> Deflator {
    Deflator::new((2008..=2022).map(|y| (y, 1.0 + 0.02 * (y - 2015) as f64)))
}

fn brute_covered(spells: &[SpellRecord], from: NaiveDate, to: NaiveDate) -> i64 {
    let mut days = BTreeSet::new();
    for s in spells.iter().filter(|s| s.kind == SpellKind::UbiiReceipt) {
        let mut d = s.start;
        while d <= s.end {
            if d >= from && d <= to {
                days.insert(d);
            }
            d = d.succ_opt().unwrap();
        }
    }
    days.len() as i64
}

fn brute_wage(spells: &[SpellRecord], from: NaiveDate, to: NaiveDate) -> i64 {
    let mut total = 0;
    for s in spells.iter().filter(|s| s.kind == SpellKind::Employment) {
        let mut d = from;
        while d <= to {
            if d >= s.start && d <= s.end {
                total += s.monthly_gross_wage.cents();
            }
            d = d.succ_opt().unwrap();
        }
    }
    total
}

fn covariates(spells: Vec<SpellRecord>, interview: Quarter) -> takeup_core::spells::LongTermCovariates {
    let index = SpellIndex::new(spells).unwrap();
    let history = index.history(HH, interview.offset(-12), 12);
    covariates_from_history(&history, interview, 1.5, &deflator(), Money::from_euros(900)).unwrap()
}

#[test]
fn lag_windows_tile_twelve_quarters() {
    let t = Quarter::new(2018, 3);
    let mut seen = BTreeSet::new();
    for lag in 1..=3 {
        let w: Vec<Quarter> = lag_window(t, lag).collect();
        assert_eq!(w.len(), 4);
        for q in w {
            assert!(seen.insert(q.index()), "windows overlap");
        }
    }
    let expected: BTreeSet<i32> = (1..=12).map(|k| t.offset(-k).index()).collect();
    assert_eq!(seen, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_arithmetic_matches_day_enumeration(spells in arb_spells(), a in 0u64..3400, len in 0u64..400) {
        let (from, to) = (day(a), day(a + len));
        let index = SpellIndex::new(spells.clone()).unwrap();
        prop_assert_eq!(index.covered_days(HH, from, to), brute_covered(&spells, from, to));
        prop_assert_eq!(index.wage_cent_days(HH, from, to), brute_wage(&spells, from, to));
    }

    #[test]
    fn shifting_interview_by_a_year_moves_lags(spells in arb_spells(), t in arb_interview()) {
        let index = SpellIndex::new(spells).unwrap();
        let later = t.offset(4);
        prop_assert_eq!(index.receipt_share(HH, later, 2), index.receipt_share(HH, t, 1));
        prop_assert_eq!(index.receipt_share(HH, later, 3), index.receipt_share(HH, t, 2));
        let h_now = index.history(HH, t.offset(-12), 12);
        let h_later = index.history(HH, later.offset(-12), 12);
        for lag in 1..=2u32 {
            for (q0, q1) in lag_window(t, lag).zip(lag_window(later, lag + 1)) {
                prop_assert_eq!(h_now.wage_cent_days_in(q0), h_later.wage_cent_days_in(q1));
            }
        }
    }

    #[test]
    fn splitting_a_spell_changes_nothing(spells in arb_spells(), pick in 0usize..8, cut in 0u64..500, t in arb_interview()) {
        prop_assume!(!spells.is_empty());
        let k = pick % spells.len();
        let s = spells[k].clone();
        let span = (s.end - s.start).num_days() as u64;
        prop_assume!(span > 0);
        let cut = cut % span;
        let mut split = spells.clone();
        split.remove(k);
        let mut first = s.clone();
        first.end = s.start.checked_add_days(Days::new(cut)).unwrap();
        let mut second = s;
        second.start = first.end.succ_opt().unwrap();
        split.push(first);
        split.push(second);
        prop_assert_eq!(covariates(spells, t), covariates(split, t));
    }

    #[test]
    fn deflation_is_homogeneous(spells in arb_spells(), t in arb_interview(), c in 2i64..5) {
        let scaled: Vec<SpellRecord> = spells
            .iter()
            .cloned()
            .map(|mut s| {
                s.monthly_gross_wage = s.monthly_gross_wage * c;
                s
            })
            .collect();
        let d = deflator();
        let d_scaled = Deflator::new((2008..=2022).map(|y| (y, d.get(y).unwrap() * c as f64)));
        let hist = |sp: Vec<SpellRecord>| SpellIndex::new(sp).unwrap().history(HH, t.offset(-12), 12);
        let base = covariates_from_history(&hist(spells), t, 1.5, &d, Money::from_euros(900)).unwrap();
        let other = covariates_from_history(&hist(scaled), t, 1.5, &d_scaled, Money::from_euros(900)).unwrap();
        for (a, b) in [
            (base.income_lag1, other.income_lag1),
            (base.income_lag2, other.income_lag2),
            (base.income_lag3, other.income_lag3),
            (base.income_volatility, other.income_volatility),
        ] {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn receipt_shares_are_fractions(spells in arb_spells(), t in arb_interview()) {
        let c = covariates(spells, t);
        for s in [c.receipt_share_lag1, c.receipt_share_lag2, c.receipt_share_lag3] {
            prop_assert!((0.0..=1.0).contains(&s));
        }
        prop_assert!(c.income_volatility >= 0.0);
    }
}
