use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::household::{HouseholdSnapshot, Role};
use super::params::{PolicySet, PolicyYearParameters};
use crate::error::{Error, Result};
use crate::money::Money;

/// Simulated UB II position of one household snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitlementResult {
    pub household_id: u64,
    pub wave_year: i32,
    pub need_total: Money,
    pub recognized_housing: Money,
    pub countable_income: Money,
    pub entitlement: Money,
    pub relative_income_gap: f64,
    pub hb_amount: Money,
    pub scb_amount: Money,
    pub eligible_ubii: bool,
    pub precedence_blocked: bool,
    pub wealth_pass: bool,
}

fn check_year(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Result<()> {
    if hh.wave_year != p.year {
        return Err(Error::InputValidation(format!(
            "household {} wave {} evaluated with {} parameters",
            hh.household_id, hh.wave_year, p.year
        )));
    }
    Ok(())
}

/// Recognized housing cost: actual cost capped per square metre. Owners
/// report their housing cost in the same field.
pub fn recognized_housing(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Money {
    let cap = p.rent_cap_per_sqm.scale(hh.dwelling_sqm);
    hh.rent_incl_heating.min(cap)
}

pub fn compute_need(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Result<Money> {
    check_year(hh, p)?;
    if hh.head().is_none() {
        return Err(Error::Composition {
            household_id: hh.household_id,
            reason: "no head".into(),
        });
    }
    hh.validate_amounts()?;

    let has_partner = hh.partner().is_some();
    let adult_rates = if has_partner {
        p.standard_rate_partner * 2
    } else {
        p.standard_rate_single
    };
    let child_rates: Money = hh.children().map(|c| p.child_rate(c.age)).sum();
    let supplement = if !has_partner && hh.n_children() > 0 {
        p.standard_rate_single.scale(p.single_parent_supplement_share)
    } else {
        Money::ZERO
    };
    Ok(adult_rates + child_rates + supplement + recognized_housing(hh, p))
}

pub fn countable_income(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Result<Money> {
    check_year(hh, p)?;
    hh.validate_amounts()?;
    Ok(hh
        .members
        .iter()
        .map(|m| {
            let earned = p.net_income_function.evaluate(m.gross_earnings)
                - p.earnings_disregard.evaluate(m.gross_earnings);
            (earned + m.other_income).max(Money::ZERO)
        })
        .sum())
}

/// Net market income of the household before any means-tested transfer.
pub fn net_market_income(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Money {
    hh.members
        .iter()
        .map(|m| p.net_income_function.evaluate(m.gross_earnings) + m.other_income)
        .sum()
}

fn notional_housing_benefit(
    hh: &HouseholdSnapshot,
    p: &PolicyYearParameters,
    income: Money,
) -> Money {
    let rent_net_of_heating = recognized_housing(hh, p).scale(1.0 - p.heating_share);
    let notional = rent_net_of_heating.scale(p.hb_schedule.rent_coverage)
        - income.scale(p.hb_schedule.income_withdrawal);
    notional.max(Money::ZERO)
}

/// Housing benefit under the coverage rule: payable only when countable
/// income plus the notional benefit reaches `hb_coverage_factor` of the
/// UB II need (inclusive).
pub fn housing_benefit_given(
    hh: &HouseholdSnapshot,
    p: &PolicyYearParameters,
    need: Money,
    income: Money,
) -> Money {
    let notional = notional_housing_benefit(hh, p, income);
    if notional == Money::ZERO {
        return Money::ZERO;
    }
    if income + notional >= need.scale(p.hb_coverage_factor) {
        notional
    } else {
        Money::ZERO
    }
}

pub fn compute_housing_benefit(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Result<Money> {
    let need = compute_need(hh, p)?;
    let income = countable_income(hh, p)?;
    Ok(housing_benefit_given(hh, p, need, income))
}

pub fn child_supplement_given(hh: &HouseholdSnapshot, p: &PolicyYearParameters, income: Money) -> Money {
    let n = hh.n_children() as i64;
    let s = &p.scb_schedule;
    if n == 0 || income < s.min_income {
        return Money::ZERO;
    }
    let excess = (income - s.phase_out_start).max(Money::ZERO);
    (s.per_child * n - excess.scale(s.phase_out_rate)).max(Money::ZERO)
}

/// UB II is blocked only when the upstream benefits strictly exceed it.
pub fn precedence(entitlement: Money, hb: Money, scb: Money) -> bool {
    hb + scb > entitlement
}

pub fn compute_entitlement(hh: &HouseholdSnapshot, p: &PolicyYearParameters) -> Result<EntitlementResult> {
    let need = compute_need(hh, p)?;
    let income = countable_income(hh, p)?;
    let entitlement = (need - income).max(Money::ZERO);
    let relative_income_gap = if need > Money::ZERO {
        entitlement.cents() as f64 / need.cents() as f64
    } else {
        0.0
    };
    let hb = housing_benefit_given(hh, p, need, income);
    let scb = child_supplement_given(hh, p, income);
    let precedence_blocked = precedence(entitlement, hb, scb);
    let adults = hh.members.iter().filter(|m| m.role != Role::Child).count();
    let wealth_pass = hh.wealth_class_midpoint <= p.wealth_threshold(adults, hh.n_children());
    Ok(EntitlementResult {
        household_id: hh.household_id,
        wave_year: hh.wave_year,
        need_total: need,
        recognized_housing: recognized_housing(hh, p),
        countable_income: income,
        entitlement,
        relative_income_gap,
        hb_amount: hb,
        scb_amount: scb,
        eligible_ubii: wealth_pass && !precedence_blocked && entitlement > Money::ZERO,
        precedence_blocked,
        wealth_pass,
    })
}

/// Evaluates every snapshot under its wave year's parameters, preserving
/// input order.
pub fn simulate_population(
    panel: &[HouseholdSnapshot],
    policies: &PolicySet,
) -> Result<Vec<EntitlementResult>> {
    panel
        .par_iter()
        .map(|hh| compute_entitlement(hh, policies.get(hh.wave_year)?))
        .collect()
}
