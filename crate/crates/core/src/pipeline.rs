//! Joins of snapshots, entitlements and spell aggregates into estimation
//! and metrics rows.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{HouseholdType, PanelObservation};
use crate::metrics::MetricsRow;
use crate::money::Money;
use crate::rules::{net_market_income, EntitlementResult, HouseholdSnapshot, PolicySet, Role};
use crate::spells::{build_covariates, Deflator, LongTermCovariates, SpellIndex};

pub fn household_type(hh: &HouseholdSnapshot) -> HouseholdType {
    match (hh.partner().is_some(), hh.n_children() > 0) {
        (false, false) => HouseholdType::Single,
        (true, false) => HouseholdType::CoupleNoChildren,
        (false, true) => HouseholdType::SingleParent,
        (true, true) => HouseholdType::CoupleWithChildren,
    }
}

/// Estimation row for one snapshot. Take-up is the administrative receipt
/// indicator; disability and early retirement refer to any adult.
pub fn observation(hh: &HouseholdSnapshot, ent: &EntitlementResult, long_term: LongTermCovariates) -> Result<PanelObservation> {
    let head = hh.head().ok_or_else(|| Error::Composition {
        household_id: hh.household_id,
        reason: "no head".into(),
    })?;
    let adults = || hh.members.iter().filter(|m| m.role != Role::Child);
    let o = PanelObservation {
        household_id: hh.household_id,
        wave_year: hh.wave_year,
        takeup: hh.admin_ubii_at_interview,
        weight: hh.survey_weight,
        relative_income_gap: ent.relative_income_gap,
        age_head: head.age,
        education_head: hh.education_head,
        household_type: household_type(hh),
        child_under4: hh.children().any(|c| c.age <= 3),
        sex_head: hh.sex_head,
        migration_head: hh.migration_head,
        disabled: adults().any(|m| m.disabled),
        early_retirement: adults().any(|m| m.early_retirement_self_assessed),
        home_owner: hh.home_owner,
        region: hh.region,
        municipality_size: hh.municipality_size,
        sample_origin: hh.sample_origin,
        other_benefit_reported: hh.reported_hb || hh.reported_scb,
        long_term,
    };
    o.validate()?;
    Ok(o)
}

fn index_entitlements(ents: &[EntitlementResult]) -> HashMap<(u64, i32), &EntitlementResult> {
    ents.iter().map(|e| ((e.household_id, e.wave_year), e)).collect()
}

fn lookup<'a>(
    map: &HashMap<(u64, i32), &'a EntitlementResult>,
    hh: &HouseholdSnapshot,
) -> Result<&'a EntitlementResult> {
    map.get(&(hh.household_id, hh.wave_year)).copied().ok_or_else(|| {
        Error::InputValidation(format!(
            "no entitlement for household {} wave {}",
            hh.household_id, hh.wave_year
        ))
    })
}

/// Estimation rows for `panel`, in input order.
pub fn build_observations(
    panel: &[HouseholdSnapshot],
    entitlements: &[EntitlementResult],
    spells: &SpellIndex,
    deflator: &Deflator,
) -> Result<Vec<PanelObservation>> {
    let map = index_entitlements(entitlements);
    panel
        .par_iter()
        .map(|hh| {
            let ent = lookup(&map, hh)?;
            let lt = build_covariates(spells, hh, ent.need_total, deflator)?;
            observation(hh, ent, lt)
        })
        .collect()
}

fn age_band(age: u32) -> &'static str {
    match age {
        0..=24 => "15-24",
        25..=34 => "25-34",
        35..=44 => "35-44",
        45..=54 => "45-54",
        _ => "55+",
    }
}

/// Simulated disposable income: net earnings and other income plus the
/// benefits the household is simulated to receive. UB II counts only when
/// eligible and received according to the administrative record; HB and
/// SCB count otherwise.
pub fn simulated_disposable_income(hh: &HouseholdSnapshot, ent: &EntitlementResult, policies: &PolicySet) -> Result<Money> {
    let p = policies.get(hh.wave_year)?;
    let other: Money = hh.members.iter().map(|m| m.other_income).sum();
    let benefits = if ent.eligible_ubii {
        if hh.admin_ubii_at_interview {
            ent.entitlement
        } else {
            Money::ZERO
        }
    } else {
        ent.hb_amount + ent.scb_amount
    };
    Ok(net_market_income(hh, p) + other + benefits)
}

/// Metrics row for one snapshot; incomes are real (2020 prices) and
/// equivalised.
pub fn metrics_row(hh: &HouseholdSnapshot, ent: &EntitlementResult, policies: &PolicySet) -> Result<MetricsRow> {
    let cpi = policies.cpi(hh.wave_year)?;
    let eq = hh.equivalence_weight();
    let real = |m: Money| m.euros() / cpi / eq;
    let head_age = hh.head().map(|m| m.age).unwrap_or(0);
    let mut subgroups = BTreeMap::new();
    let hh_type = match household_type(hh) {
        HouseholdType::Single => "single",
        HouseholdType::CoupleNoChildren => "couple_no_children",
        HouseholdType::SingleParent => "single_parent",
        HouseholdType::CoupleWithChildren => "couple_with_children",
    };
    subgroups.insert("household_type".to_string(), hh_type.to_string());
    subgroups.insert("age_head".to_string(), age_band(head_age).to_string());
    subgroups.insert("sex_head".to_string(), format!("{:?}", hh.sex_head).to_lowercase());
    subgroups.insert("region".to_string(), format!("{:?}", hh.region).to_lowercase());
    subgroups.insert(
        "migration_head".to_string(),
        match hh.migration_head {
            crate::rules::Migration::None => "none",
            crate::rules::Migration::FirstGeneration => "first_generation",
            crate::rules::Migration::SecondGeneration => "second_generation",
        }
        .to_string(),
    );
    subgroups.insert(
        "employment".to_string(),
        if hh.members.iter().any(|m| m.gross_earnings > Money::ZERO) { "employed" } else { "not_employed" }.to_string(),
    );
    Ok(MetricsRow {
        household_id: hh.household_id,
        wave_year: hh.wave_year,
        weight: hh.survey_weight,
        sample: hh.sample_origin,
        eligible: ent.eligible_ubii,
        reported_receipt: hh.reported_ubii,
        admin_receipt: hh.admin_ubii_at_interview,
        relative_income_gap: ent.relative_income_gap,
        entitlement: real(ent.entitlement),
        reported_income: real(hh.reported_net_income),
        simulated_income: real(simulated_disposable_income(hh, ent, policies)?),
        subgroups,
    })
}

pub fn build_metrics_rows(
    panel: &[HouseholdSnapshot],
    entitlements: &[EntitlementResult],
    policies: &PolicySet,
) -> Result<Vec<MetricsRow>> {
    let map = index_entitlements(entitlements);
    panel
        .iter()
        .map(|hh| metrics_row(hh, lookup(&map, hh)?, policies))
        .collect()
}
