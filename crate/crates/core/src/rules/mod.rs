//! Means test for UB II and the two upstream benefits (housing benefit,
//! supplementary child benefit), evaluated per household snapshot.
//!
//! All amounts are monthly and held in whole cents. The entitlement is
//! `max(need - countable income, 0)`; the relative income gap normalizes it
//! by the need so households of different size are comparable.

mod engine;
mod household;
mod params;

pub use engine::{
    child_supplement_given, compute_entitlement, compute_housing_benefit, compute_need,
    countable_income, housing_benefit_given, net_market_income, precedence, recognized_housing,
    simulate_population, EntitlementResult,
};
pub use household::{
    equivalence_weight, Education, HouseholdSnapshot, Member, Migration, MunicipalitySize, Region,
    Role, SampleOrigin, Sex,
};
pub use params::{
    default_earnings_disregard, ChildRate, ChildSupplementSchedule, EarningsDisregard,
    HousingBenefitSchedule, NetIncomeFunction, NetIncomeSegment, PolicySet, PolicyYearParameters,
    RetentionBracket, DEFAULT_HB_COVERAGE_FACTOR, DEFAULT_HEATING_SHARE,
    DEFAULT_RENT_CAP_EUR_PER_SQM,
};

#[cfg(test)]
pub(crate) use household::fixtures;
