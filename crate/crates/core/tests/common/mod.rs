#![allow(dead_code)]

use chrono::NaiveDate;
use proptest::prelude::*;
use takeup_core::estimator::{Column, ColumnRole, Dataset};
use takeup_core::rules::{
    Education, HouseholdSnapshot, Member, Migration, MunicipalitySize, Region, Role, SampleOrigin, Sex,
};
use takeup_core::Money;

pub fn household(id: u64, year: i32, members: Vec<Member>) -> HouseholdSnapshot {
    HouseholdSnapshot {
        household_id: id,
        wave_year: year,
        interview_date: NaiveDate::from_ymd_opt(year, 5, 15).unwrap(),
        members,
        rent_incl_heating: Money::from_euros(400),
        dwelling_sqm: 50.0,
        home_owner: false,
        wealth_class_midpoint: Money::ZERO,
        region: Region::West,
        municipality_size: MunicipalitySize::Under50k,
        migration_head: Migration::None,
        education_head: Education::Secondary,
        sex_head: Sex::Male,
        sample_origin: SampleOrigin::Admin,
        reported_ubii: false,
        reported_hb: false,
        reported_scb: false,
        admin_ubii_at_interview: false,
        survey_weight: 1.0,
        reported_net_income: Money::ZERO,
        interview_complete: true,
        communities_of_needs: 1,
        core_family: true,
        partner_referenced: false,
        regressors_complete: true,
    }
}

/// Random valid household for the default 2020 policy year.
pub fn arb_household() -> impl Strategy<Value = HouseholdSnapshot> {
    (
        (18u32..70, 0i64..400_000, 0i64..100_000),
        proptest::option::of((18u32..70, 0i64..400_000, 0i64..50_000)),
        proptest::collection::vec((0u32..25, 0i64..30_000), 0..4),
        (0i64..200_000, 10u32..140, any::<bool>(), 0i64..3_000_000),
    )
        .prop_map(|(head, partner, children, (rent, sqm, owner, wealth))| {
            let mut members = vec![Member::new(1, Role::Head, head.0).with_earnings(Money::from_cents(head.1))];
            members[0].other_income = Money::from_cents(head.2);
            if let Some((age, gross, other)) = partner {
                let mut m = Member::new(2, Role::Partner, age).with_earnings(Money::from_cents(gross));
                m.other_income = Money::from_cents(other);
                members.push(m);
            }
            for (i, (age, other)) in children.into_iter().enumerate() {
                let mut c = Member::new(10 + i as u64, Role::Child, age);
                c.other_income = Money::from_cents(other);
                members.push(c);
            }
            let mut hh = household(1, 2020, members);
            hh.rent_incl_heating = Money::from_cents(rent);
            hh.dwelling_sqm = sqm as f64;
            hh.home_owner = owner;
            hh.wealth_class_midpoint = Money::from_cents(wealth);
            hh
        })
}

pub fn columns(p: usize) -> Vec<Column> {
    (0..p)
        .map(|j| Column {
            name: if j == 0 { "intercept".into() } else { format!("x{j}") },
            role: if j == 0 { ColumnRole::Intercept } else { ColumnRole::Continuous },
        })
        .collect()
}

/// Panel of `households` groups with `waves` rows each; `x` has an
/// intercept followed by `p - 1` regressors drawn from `values`, plus a
/// fixed jitter that keeps the design full rank while shrinking.
pub fn dataset(households: usize, waves: usize, p: usize, values: &[f64], ys: &[bool], weights: &[f64]) -> Dataset {
    let mut rows = Vec::new();
    let mut k = 0;
    for h in 0..households {
        for t in 0..waves {
            let mut x = vec![1.0];
            for _ in 1..p {
                x.push(values[k % values.len()] + 0.05 * ((k * 7919) % 13) as f64);
                k += 1;
            }
            let i = h * waves + t;
            rows.push((h as u64, 2010 + t as i32, ys[i % ys.len()], x, weights[i % weights.len()]));
        }
    }
    Dataset::new(columns(p), rows).unwrap()
}
