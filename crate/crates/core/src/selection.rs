//! Ordered exclusion cascade from the raw household panel to the
//! estimation sample, with a per-year ledger of surviving observations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;
use crate::rules::{EntitlementResult, HouseholdSnapshot, Role, SampleOrigin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    MissingInterview,
    MultipleCommunities,
    NonCoreFamily,
    InconsistentWage,
    InconsistentPartner,
    Pensioner,
    StudentOrTrainee,
    RefugeeSample,
    SimulatedIneligible,
    ChangingHead,
    MissingRegressors,
    NoLinkage,
}

impl Filter {
    pub const DEFAULT_ORDER: [Filter; 12] = [
        Filter::MissingInterview,
        Filter::MultipleCommunities,
        Filter::NonCoreFamily,
        Filter::InconsistentWage,
        Filter::InconsistentPartner,
        Filter::Pensioner,
        Filter::StudentOrTrainee,
        Filter::RefugeeSample,
        Filter::SimulatedIneligible,
        Filter::ChangingHead,
        Filter::MissingRegressors,
        Filter::NoLinkage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Filter::MissingInterview => "missing_interview",
            Filter::MultipleCommunities => "multiple_communities",
            Filter::NonCoreFamily => "non_core_family",
            Filter::InconsistentWage => "inconsistent_wage",
            Filter::InconsistentPartner => "inconsistent_partner",
            Filter::Pensioner => "pensioner",
            Filter::StudentOrTrainee => "student_or_trainee",
            Filter::RefugeeSample => "refugee_sample",
            Filter::SimulatedIneligible => "simulated_ineligible",
            Filter::ChangingHead => "changing_head",
            Filter::MissingRegressors => "missing_regressors",
            Filter::NoLinkage => "no_linkage",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Filter::DEFAULT_ORDER
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown selection filter `{s}`")))
    }
}

/// Active filters in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionConfig {
    pub filters: Vec<Filter>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            filters: Filter::DEFAULT_ORDER.to_vec(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    filters: Vec<String>,
}

impl SelectionConfig {
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut filters = Vec::with_capacity(names.len());
        for n in names {
            let f: Filter = n.as_ref().parse()?;
            if !seen.insert(f) {
                return Err(Error::Configuration(format!("filter `{f}` listed twice")));
            }
            filters.push(f);
        }
        Ok(SelectionConfig { filters })
    }

    /// `filters = ["missing_interview", ...]`
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Configuration(format!("selection config: {e}")))?;
        Self::from_names(&file.filters)
    }
}

/// Facts about the whole input panel that single-row predicates need.
#[derive(Debug, Clone, Default)]
pub struct PanelContext {
    changing_head: BTreeSet<u64>,
    linked: BTreeSet<u64>,
}

impl PanelContext {
    pub fn new(panel: &[HouseholdSnapshot], linked: &BTreeSet<u64>) -> Self {
        let mut heads: BTreeMap<u64, BTreeSet<Option<u64>>> = BTreeMap::new();
        for hh in panel {
            heads
                .entry(hh.household_id)
                .or_default()
                .insert(hh.head().map(|m| m.person_id));
        }
        PanelContext {
            changing_head: heads.into_iter().filter(|(_, h)| h.len() > 1).map(|(id, _)| id).collect(),
            linked: linked.clone(),
        }
    }
}

/// Whether `hh` fails `filter`. The eligibility filter needs the
/// household's entitlement.
pub fn fails(
    filter: Filter,
    hh: &HouseholdSnapshot,
    entitlement: Option<&EntitlementResult>,
    ctx: &PanelContext,
) -> Result<bool> {
    let adults = || hh.members.iter().filter(|m| m.role != Role::Child);
    Ok(match filter {
        Filter::MissingInterview => !hh.interview_complete,
        Filter::MultipleCommunities => hh.communities_of_needs > 1,
        Filter::NonCoreFamily => !hh.core_family,
        Filter::InconsistentWage => adults().any(|m| m.gainfully_employed && m.gross_earnings == Money::ZERO),
        Filter::InconsistentPartner => hh.partner_referenced && hh.partner().is_none(),
        Filter::Pensioner => hh.members.iter().any(|m| m.pensioner),
        Filter::StudentOrTrainee => adults().any(|m| m.student_or_trainee),
        Filter::RefugeeSample => hh.sample_origin == SampleOrigin::Refugee,
        Filter::SimulatedIneligible => {
            let e = entitlement.ok_or_else(|| {
                Error::InputValidation(format!(
                    "no entitlement for household {} wave {}",
                    hh.household_id, hh.wave_year
                ))
            })?;
            !e.eligible_ubii
        }
        Filter::ChangingHead => ctx.changing_head.contains(&hh.household_id),
        Filter::MissingRegressors => !hh.regressors_complete,
        Filter::NoLinkage => !ctx.linked.contains(&hh.household_id),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    /// `"initial"` for the raw panel, otherwise the filter name.
    pub step: String,
    pub by_year: BTreeMap<i32, u64>,
    pub total: u64,
}

/// Surviving household-wave counts after each step of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionLedger {
    pub years: Vec<i32>,
    pub rows: Vec<LedgerRow>,
    /// `(household_id, wave_year)` of the final sample.
    pub final_ids: Vec<(u64, i32)>,
}

impl SelectionLedger {
    pub fn row(&self, step: &str) -> Option<&LedgerRow> {
        self.rows.iter().find(|r| r.step == step)
    }
}

#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub ledger: SelectionLedger,
    /// First failing filter per input row, in input order.
    pub dropped_by: Vec<Option<Filter>>,
    /// Every active filter each row fails, regardless of order.
    pub failed: Vec<Vec<Filter>>,
    pub kept: Vec<HouseholdSnapshot>,
}

impl SelectionOutcome {
    /// Input rows failing no active filter other than those in `except`.
    pub fn passes_all_except(&self, except: &[Filter]) -> Vec<bool> {
        self.failed
            .iter()
            .map(|f| f.iter().all(|x| except.contains(x)))
            .collect()
    }
}

/// Runs the cascade. `entitlements` is keyed by `(household_id,
/// wave_year)` and must cover every row reaching the eligibility filter.
pub fn apply_cascade(
    panel: &[HouseholdSnapshot],
    entitlements: &HashMap<(u64, i32), EntitlementResult>,
    linked: &BTreeSet<u64>,
    config: &SelectionConfig,
) -> Result<SelectionOutcome> {
    let ctx = PanelContext::new(panel, linked);
    let years: Vec<i32> = panel.iter().map(|h| h.wave_year).collect::<BTreeSet<_>>().into_iter().collect();
    let mut alive = vec![true; panel.len()];
    let mut dropped_by = vec![None; panel.len()];
    let mut failed = vec![Vec::new(); panel.len()];

    let count = |alive: &[bool], step: String| {
        let mut by_year: BTreeMap<i32, u64> = years.iter().map(|&y| (y, 0)).collect();
        for (hh, _) in panel.iter().zip(alive).filter(|(_, a)| **a) {
            *by_year.get_mut(&hh.wave_year).expect("year collected above") += 1;
        }
        let total = by_year.values().sum();
        LedgerRow { step, by_year, total }
    };
    let mut rows = vec![count(&alive, "initial".to_string())];

    for &filter in &config.filters {
        for (i, hh) in panel.iter().enumerate() {
            let key = (hh.household_id, hh.wave_year);
            // Rows already dropped never need an entitlement.
            let ent = entitlements.get(&key);
            if filter == Filter::SimulatedIneligible && ent.is_none() && !alive[i] {
                continue;
            }
            if fails(filter, hh, ent, &ctx)? {
                failed[i].push(filter);
                if alive[i] {
                    alive[i] = false;
                    dropped_by[i] = Some(filter);
                }
            }
        }
        rows.push(count(&alive, filter.name().to_string()));
    }

    let kept: Vec<HouseholdSnapshot> =
        panel.iter().zip(&alive).filter(|(_, a)| **a).map(|(h, _)| h.clone()).collect();
    let final_ids = kept.iter().map(|h| (h.household_id, h.wave_year)).collect();
    Ok(SelectionOutcome {
        ledger: SelectionLedger { years, rows, final_ids },
        dropped_by,
        failed,
        kept,
    })
}

/// Take-up and non-take-up counts of the estimation sample, using the
/// administrative receipt indicator.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TakeupCounts {
    pub by_year: BTreeMap<i32, (u64, u64)>,
    pub takeup: u64,
    pub non_takeup: u64,
}

impl TakeupCounts {
    pub fn from_flags(rows: impl IntoIterator<Item = (i32, bool)>) -> Self {
        let mut c = TakeupCounts::default();
        for (year, takeup) in rows {
            let e = c.by_year.entry(year).or_insert((0, 0));
            if takeup {
                e.0 += 1;
                c.takeup += 1;
            } else {
                e.1 += 1;
                c.non_takeup += 1;
            }
        }
        c
    }

    /// Unweighted non-take-up rate of the whole sample.
    pub fn ntr(&self) -> Result<f64> {
        rate(self.non_takeup, self.takeup + self.non_takeup)
    }

    pub fn ntr_in(&self, year: i32) -> Result<f64> {
        let (t, n) = self.by_year.get(&year).copied().unwrap_or((0, 0));
        rate(n, t + n)
    }
}

fn rate(num: u64, den: u64) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedRate("no eligible observations"))
    } else {
        Ok(num as f64 / den as f64)
    }
}

pub fn takeup_counts(filtered: &[HouseholdSnapshot]) -> TakeupCounts {
    TakeupCounts::from_flags(filtered.iter().map(|h| (h.wave_year, h.admin_ubii_at_interview)))
}
