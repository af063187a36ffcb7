//! Delimited-text files exchanged between pipeline stages.
//!
//! Every table is comma-separated with a header row. Amounts are euro
//! strings with two decimals, dates are ISO `YYYY-MM-DD`, booleans are
//! `true`/`false` and categories are snake_case names. Readers check the
//! header against the expected schema and report the offending line.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{HouseholdType, PanelObservation};
use crate::money::Money;
use crate::rules::{
    EntitlementResult, Education, HouseholdSnapshot, Member, Migration, MunicipalitySize, Region, Role, SampleOrigin,
    Sex,
};
use crate::selection::{Filter, SelectionLedger, SelectionOutcome};
use crate::spells::{LongTermCovariates, SpellRecord};

pub const PANEL: &str = "panel.csv";
pub const MEMBERS: &str = "members.csv";
pub const SPELLS: &str = "spells.csv";
pub const LINKAGE: &str = "linkage.csv";
pub const ENTITLEMENTS: &str = "entitlements.csv";
pub const SELECTION: &str = "selection.csv";
pub const LEDGER: &str = "ledger.csv";
pub const OBSERVATIONS: &str = "observations.csv";
pub const TRUTH: &str = "truth.csv";
pub const POLICY: &str = "policy.toml";

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

/// Writes `rows` with a header taken from the field names of `T`. An empty
/// table still gets its header when `header` is given.
pub fn write_csv<T: Serialize>(path: &Path, header: Option<&[&str]>, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut rows = rows.into_iter().peekable();
    let mut w = csv::WriterBuilder::new()
        .has_headers(rows.peek().is_some() || header.is_none())
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    if rows.peek().is_none() {
        if let Some(h) = header {
            w.write_record(h).map_err(|e| csv_error(path, e))?;
        }
    }
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table, requiring the header to contain every name in `required`.
pub fn read_csv<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if !(headers.is_empty() && required.is_empty()) {
        let missing: Vec<&str> = required.iter().copied().filter(|c| !headers.iter().any(|h| h == *c)).collect();
        if !missing.is_empty() {
            return Err(Error::parse(path, 1, format!("missing columns: {}", missing.join(", "))));
        }
    }
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn check_unique(path: &Path, keys: impl IntoIterator<Item = (u64, i32)>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (i, k) in keys.into_iter().enumerate() {
        if !seen.insert(k) {
            return Err(Error::parse(path, i as u64 + 2, format!("duplicate household-wave {}/{}", k.0, k.1)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HouseholdRecord {
    household_id: u64,
    wave_year: i32,
    interview_date: NaiveDate,
    rent_incl_heating: Money,
    dwelling_sqm: f64,
    home_owner: bool,
    wealth_class_midpoint: Money,
    region: Region,
    municipality_size: MunicipalitySize,
    migration_head: Migration,
    education_head: Education,
    sex_head: Sex,
    sample_origin: SampleOrigin,
    reported_ubii: bool,
    reported_hb: bool,
    reported_scb: bool,
    admin_ubii_at_interview: bool,
    survey_weight: f64,
    reported_net_income: Money,
    interview_complete: bool,
    communities_of_needs: u8,
    core_family: bool,
    partner_referenced: bool,
    regressors_complete: bool,
}

const PANEL_COLUMNS: &[&str] = &[
    "household_id",
    "wave_year",
    "interview_date",
    "rent_incl_heating",
    "dwelling_sqm",
    "home_owner",
    "wealth_class_midpoint",
    "region",
    "municipality_size",
    "migration_head",
    "education_head",
    "sex_head",
    "sample_origin",
    "reported_ubii",
    "reported_hb",
    "reported_scb",
    "admin_ubii_at_interview",
    "survey_weight",
    "reported_net_income",
    "interview_complete",
    "communities_of_needs",
    "core_family",
    "partner_referenced",
    "regressors_complete",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MemberRecord {
    household_id: u64,
    wave_year: i32,
    person_id: u64,
    role: Role,
    age: u32,
    gross_earnings: Money,
    other_income: Money,
    student_or_trainee: bool,
    pensioner: bool,
    early_retirement_self_assessed: bool,
    disabled: bool,
    employable: bool,
    gainfully_employed: bool,
}

const MEMBER_COLUMNS: &[&str] = &[
    "household_id",
    "wave_year",
    "person_id",
    "role",
    "age",
    "gross_earnings",
    "other_income",
    "student_or_trainee",
    "pensioner",
    "early_retirement_self_assessed",
    "disabled",
    "employable",
    "gainfully_employed",
];

/// Writes household-level fields to `panel` and one row per member to
/// `members`.
pub fn write_households(panel: &Path, members: &Path, households: &[HouseholdSnapshot]) -> Result<()> {
    write_csv(
        panel,
        Some(PANEL_COLUMNS),
        households.iter().map(|h| HouseholdRecord {
            household_id: h.household_id,
            wave_year: h.wave_year,
            interview_date: h.interview_date,
            rent_incl_heating: h.rent_incl_heating,
            dwelling_sqm: h.dwelling_sqm,
            home_owner: h.home_owner,
            wealth_class_midpoint: h.wealth_class_midpoint,
            region: h.region,
            municipality_size: h.municipality_size,
            migration_head: h.migration_head,
            education_head: h.education_head,
            sex_head: h.sex_head,
            sample_origin: h.sample_origin,
            reported_ubii: h.reported_ubii,
            reported_hb: h.reported_hb,
            reported_scb: h.reported_scb,
            admin_ubii_at_interview: h.admin_ubii_at_interview,
            survey_weight: h.survey_weight,
            reported_net_income: h.reported_net_income,
            interview_complete: h.interview_complete,
            communities_of_needs: h.communities_of_needs,
            core_family: h.core_family,
            partner_referenced: h.partner_referenced,
            regressors_complete: h.regressors_complete,
        }),
    )?;
    write_csv(
        members,
        Some(MEMBER_COLUMNS),
        households.iter().flat_map(|h| {
            h.members.iter().map(|m| MemberRecord {
                household_id: h.household_id,
                wave_year: h.wave_year,
                person_id: m.person_id,
                role: m.role,
                age: m.age,
                gross_earnings: m.gross_earnings,
                other_income: m.other_income,
                student_or_trainee: m.student_or_trainee,
                pensioner: m.pensioner,
                early_retirement_self_assessed: m.early_retirement_self_assessed,
                disabled: m.disabled,
                employable: m.employable,
                gainfully_employed: m.gainfully_employed,
            })
        }),
    )
}

/// Joins the two household tables; household order follows `panel`,
/// member order follows `members`. Every household must be valid.
pub fn read_households(panel: &Path, members: &Path) -> Result<Vec<HouseholdSnapshot>> {
    let hh: Vec<HouseholdRecord> = read_csv(panel, PANEL_COLUMNS)?;
    check_unique(panel, hh.iter().map(|h| (h.household_id, h.wave_year)))?;
    let ms: Vec<MemberRecord> = read_csv(members, MEMBER_COLUMNS)?;
    let mut by_key: HashMap<(u64, i32), Vec<Member>> = HashMap::new();
    for (i, m) in ms.into_iter().enumerate() {
        if !hh.iter().any(|h| h.household_id == m.household_id && h.wave_year == m.wave_year) {
            return Err(Error::parse(
                members,
                i as u64 + 2,
                format!("member of unknown household-wave {}/{}", m.household_id, m.wave_year),
            ));
        }
        by_key.entry((m.household_id, m.wave_year)).or_default().push(Member {
            person_id: m.person_id,
            age: m.age,
            role: m.role,
            gross_earnings: m.gross_earnings,
            other_income: m.other_income,
            student_or_trainee: m.student_or_trainee,
            pensioner: m.pensioner,
            early_retirement_self_assessed: m.early_retirement_self_assessed,
            disabled: m.disabled,
            employable: m.employable,
            gainfully_employed: m.gainfully_employed,
        });
    }
    hh.into_iter()
        .map(|h| {
            let s = HouseholdSnapshot {
                household_id: h.household_id,
                wave_year: h.wave_year,
                interview_date: h.interview_date,
                members: by_key.remove(&(h.household_id, h.wave_year)).unwrap_or_default(),
                rent_incl_heating: h.rent_incl_heating,
                dwelling_sqm: h.dwelling_sqm,
                home_owner: h.home_owner,
                wealth_class_midpoint: h.wealth_class_midpoint,
                region: h.region,
                municipality_size: h.municipality_size,
                migration_head: h.migration_head,
                education_head: h.education_head,
                sex_head: h.sex_head,
                sample_origin: h.sample_origin,
                reported_ubii: h.reported_ubii,
                reported_hb: h.reported_hb,
                reported_scb: h.reported_scb,
                admin_ubii_at_interview: h.admin_ubii_at_interview,
                survey_weight: h.survey_weight,
                reported_net_income: h.reported_net_income,
                interview_complete: h.interview_complete,
                communities_of_needs: h.communities_of_needs,
                core_family: h.core_family,
                partner_referenced: h.partner_referenced,
                regressors_complete: h.regressors_complete,
            };
            s.validate()?;
            Ok(s)
        })
        .collect()
}

const SPELL_COLUMNS: &[&str] = &["person_id", "household_id", "kind", "start", "end", "monthly_gross_wage"];

pub fn write_spells(path: &Path, spells: &[SpellRecord]) -> Result<()> {
    write_csv(path, Some(SPELL_COLUMNS), spells)
}

pub fn read_spells(path: &Path) -> Result<Vec<SpellRecord>> {
    let spells: Vec<SpellRecord> = read_csv(path, SPELL_COLUMNS)?;
    for (i, s) in spells.iter().enumerate() {
        s.validate().map_err(|e| Error::parse(path, i as u64 + 2, e.to_string()))?;
    }
    Ok(spells)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LinkageRecord {
    household_id: u64,
}

/// Households with administrative linkage, one id per line.
pub fn write_linkage(path: &Path, linked: &BTreeSet<u64>) -> Result<()> {
    write_csv(path, Some(&["household_id"]), linked.iter().map(|&household_id| LinkageRecord { household_id }))
}

pub fn read_linkage(path: &Path) -> Result<BTreeSet<u64>> {
    let rows: Vec<LinkageRecord> = read_csv(path, &["household_id"])?;
    Ok(rows.into_iter().map(|r| r.household_id).collect())
}

const ENTITLEMENT_COLUMNS: &[&str] = &[
    "household_id",
    "wave_year",
    "need_total",
    "recognized_housing",
    "countable_income",
    "entitlement",
    "relative_income_gap",
    "hb_amount",
    "scb_amount",
    "eligible_ubii",
    "precedence_blocked",
    "wealth_pass",
];

pub fn write_entitlements(path: &Path, ents: &[EntitlementResult]) -> Result<()> {
    write_csv(path, Some(ENTITLEMENT_COLUMNS), ents)
}

pub fn read_entitlements(path: &Path) -> Result<Vec<EntitlementResult>> {
    let ents: Vec<EntitlementResult> = read_csv(path, ENTITLEMENT_COLUMNS)?;
    check_unique(path, ents.iter().map(|e| (e.household_id, e.wave_year)))?;
    Ok(ents)
}

/// Selection status of one household-wave. `dropped_by` is empty for kept
/// rows; `failed` lists every failing filter separated by `;`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub household_id: u64,
    pub wave_year: i32,
    pub dropped_by: String,
    pub failed: String,
}

impl SelectionRecord {
    pub fn kept(&self) -> bool {
        self.dropped_by.is_empty()
    }

    pub fn failed_filters(&self) -> Result<Vec<Filter>> {
        self.failed.split(';').filter(|s| !s.is_empty()).map(str::parse).collect()
    }
}

const SELECTION_COLUMNS: &[&str] = &["household_id", "wave_year", "dropped_by", "failed"];

pub fn selection_records(panel: &[HouseholdSnapshot], outcome: &SelectionOutcome) -> Vec<SelectionRecord> {
    panel
        .iter()
        .zip(outcome.dropped_by.iter().zip(&outcome.failed))
        .map(|(h, (d, f))| SelectionRecord {
            household_id: h.household_id,
            wave_year: h.wave_year,
            dropped_by: d.map(|f| f.name().to_string()).unwrap_or_default(),
            failed: f.iter().map(|f| f.name()).collect::<Vec<_>>().join(";"),
        })
        .collect()
}

pub fn write_selection(path: &Path, records: &[SelectionRecord]) -> Result<()> {
    write_csv(path, Some(SELECTION_COLUMNS), records)
}

pub fn read_selection(path: &Path) -> Result<Vec<SelectionRecord>> {
    let rows: Vec<SelectionRecord> = read_csv(path, SELECTION_COLUMNS)?;
    for (i, r) in rows.iter().enumerate() {
        let bad = |e: Error| Error::parse(path, i as u64 + 2, e.to_string());
        if !r.dropped_by.is_empty() {
            r.dropped_by.parse::<Filter>().map_err(bad)?;
        }
        r.failed_filters().map_err(bad)?;
    }
    check_unique(path, rows.iter().map(|r| (r.household_id, r.wave_year)))?;
    Ok(rows)
}

/// One row per cascade step with a column per wave year and a total.
pub fn write_ledger(path: &Path, ledger: &SelectionLedger) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["step".to_string()];
    header.extend(ledger.years.iter().map(|y| y.to_string()));
    header.push("total".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in &ledger.rows {
        let mut rec = vec![row.step.clone()];
        rec.extend(ledger.years.iter().map(|y| row.by_year.get(y).copied().unwrap_or(0).to_string()));
        rec.push(row.total.to_string());
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObservationRecord {
    household_id: u64,
    wave_year: i32,
    takeup: bool,
    weight: f64,
    relative_income_gap: f64,
    age_head: u32,
    education_head: Education,
    household_type: HouseholdType,
    child_under4: bool,
    sex_head: Sex,
    migration_head: Migration,
    disabled: bool,
    early_retirement: bool,
    home_owner: bool,
    region: Region,
    municipality_size: MunicipalitySize,
    sample_origin: SampleOrigin,
    other_benefit_reported: bool,
    receipt_share_lag1: f64,
    receipt_share_lag2: f64,
    receipt_share_lag3: f64,
    income_lag1: f64,
    income_lag2: f64,
    income_lag3: f64,
    income_shock: f64,
    income_volatility: f64,
}

const OBSERVATION_COLUMNS: &[&str] = &[
    "household_id",
    "wave_year",
    "takeup",
    "weight",
    "relative_income_gap",
    "age_head",
    "education_head",
    "household_type",
    "child_under4",
    "sex_head",
    "migration_head",
    "disabled",
    "early_retirement",
    "home_owner",
    "region",
    "municipality_size",
    "sample_origin",
    "other_benefit_reported",
    "receipt_share_lag1",
    "receipt_share_lag2",
    "receipt_share_lag3",
    "income_lag1",
    "income_lag2",
    "income_lag3",
    "income_shock",
    "income_volatility",
];

pub fn write_observations(path: &Path, obs: &[PanelObservation]) -> Result<()> {
    write_csv(
        path,
        Some(OBSERVATION_COLUMNS),
        obs.iter().map(|o| {
            let lt = &o.long_term;
            ObservationRecord {
                household_id: o.household_id,
                wave_year: o.wave_year,
                takeup: o.takeup,
                weight: o.weight,
                relative_income_gap: o.relative_income_gap,
                age_head: o.age_head,
                education_head: o.education_head,
                household_type: o.household_type,
                child_under4: o.child_under4,
                sex_head: o.sex_head,
                migration_head: o.migration_head,
                disabled: o.disabled,
                early_retirement: o.early_retirement,
                home_owner: o.home_owner,
                region: o.region,
                municipality_size: o.municipality_size,
                sample_origin: o.sample_origin,
                other_benefit_reported: o.other_benefit_reported,
                receipt_share_lag1: lt.receipt_share_lag1,
                receipt_share_lag2: lt.receipt_share_lag2,
                receipt_share_lag3: lt.receipt_share_lag3,
                income_lag1: lt.income_lag1,
                income_lag2: lt.income_lag2,
                income_lag3: lt.income_lag3,
                income_shock: lt.income_shock,
                income_volatility: lt.income_volatility,
            }
        }),
    )
}

pub fn read_observations(path: &Path) -> Result<Vec<PanelObservation>> {
    let rows: Vec<ObservationRecord> = read_csv(path, OBSERVATION_COLUMNS)?;
    check_unique(path, rows.iter().map(|r| (r.household_id, r.wave_year)))?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let o = PanelObservation {
                household_id: r.household_id,
                wave_year: r.wave_year,
                takeup: r.takeup,
                weight: r.weight,
                relative_income_gap: r.relative_income_gap,
                age_head: r.age_head,
                education_head: r.education_head,
                household_type: r.household_type,
                child_under4: r.child_under4,
                sex_head: r.sex_head,
                migration_head: r.migration_head,
                disabled: r.disabled,
                early_retirement: r.early_retirement,
                home_owner: r.home_owner,
                region: r.region,
                municipality_size: r.municipality_size,
                sample_origin: r.sample_origin,
                other_benefit_reported: r.other_benefit_reported,
                long_term: LongTermCovariates {
                    receipt_share_lag1: r.receipt_share_lag1,
                    receipt_share_lag2: r.receipt_share_lag2,
                    receipt_share_lag3: r.receipt_share_lag3,
                    income_lag1: r.income_lag1,
                    income_lag2: r.income_lag2,
                    income_lag3: r.income_lag3,
                    income_shock: r.income_shock,
                    income_volatility: r.income_volatility,
                },
            };
            o.validate().map_err(|e| Error::parse(path, i as u64 + 2, e.to_string()))?;
            Ok(o)
        })
        .collect()
}
