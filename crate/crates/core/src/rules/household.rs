use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;
use crate::spells::Quarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Head,
    Partner,
    Child,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub person_id: u64,
    pub age: u32,
    pub role: Role,
    pub gross_earnings: Money,
    pub other_income: Money,
    pub student_or_trainee: bool,
    pub pensioner: bool,
    pub early_retirement_self_assessed: bool,
    pub disabled: bool,
    pub employable: bool,
    /// Survey status reports gainful employment above the marginal-job limit.
    pub gainfully_employed: bool,
}

impl Member {
    pub fn new(person_id: u64, role: Role, age: u32) -> Self {
        Member {
            person_id,
            age,
            role,
            gross_earnings: Money::ZERO,
            other_income: Money::ZERO,
            student_or_trainee: false,
            pensioner: false,
            early_retirement_self_assessed: false,
            disabled: false,
            employable: role != Role::Child,
            gainfully_employed: false,
        }
    }

    pub fn with_earnings(mut self, gross: Money) -> Self {
        self.gross_earnings = gross;
        self.gainfully_employed = gross > Money::from_euros(400);
        self
    }

    pub fn is_adult(&self) -> bool {
        matches!(self.role, Role::Head | Role::Partner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    West,
    East,
}

/// Municipality size class of the place of residence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MunicipalitySize {
    Under50k,
    Periphery50kPlus,
    Core50kTo500k,
    Core500kPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Migration {
    None,
    FirstGeneration,
    SecondGeneration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Education {
    NoCertificate,
    Elementary,
    Secondary,
    UniversityEntrance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOrigin {
    Admin,
    GenPop,
    Refugee,
}

/// One household at one interview wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdSnapshot {
    pub household_id: u64,
    pub wave_year: i32,
    pub interview_date: NaiveDate,
    /// Members of the community of needs.
    pub members: Vec<Member>,
    pub rent_incl_heating: Money,
    pub dwelling_sqm: f64,
    pub home_owner: bool,
    pub wealth_class_midpoint: Money,
    pub region: Region,
    pub municipality_size: MunicipalitySize,
    pub migration_head: Migration,
    pub education_head: Education,
    pub sex_head: Sex,
    pub sample_origin: SampleOrigin,
    pub reported_ubii: bool,
    pub reported_hb: bool,
    pub reported_scb: bool,
    pub admin_ubii_at_interview: bool,
    pub survey_weight: f64,
    /// Reported monthly disposable household income.
    pub reported_net_income: Money,
    // Data-quality attributes consumed by the selection cascade.
    pub interview_complete: bool,
    pub communities_of_needs: u8,
    pub core_family: bool,
    pub partner_referenced: bool,
    pub regressors_complete: bool,
}

impl HouseholdSnapshot {
    pub fn interview_quarter(&self) -> Quarter {
        Quarter::containing(self.interview_date)
    }

    pub fn head(&self) -> Option<&Member> {
        self.members.iter().find(|m| m.role == Role::Head)
    }

    pub fn partner(&self) -> Option<&Member> {
        self.members.iter().find(|m| m.role == Role::Partner)
    }

    pub fn adults(&self) -> usize {
        self.members.iter().filter(|m| m.is_adult()).count()
    }

    pub fn children(&self) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(|m| m.role == Role::Child)
    }

    pub fn n_children(&self) -> usize {
        self.children().count()
    }

    /// Modified OECD equivalence weight: 1.0 for the head, 0.5 for every
    /// other member aged 14 or over, 0.3 for every younger child.
    pub fn equivalence_weight(&self) -> f64 {
        equivalence_weight(self.members.iter().map(|m| (m.role, m.age)))
    }

    pub fn validate(&self) -> Result<()> {
        let comp = |reason: &str| {
            Err(Error::Composition {
                household_id: self.household_id,
                reason: reason.to_string(),
            })
        };
        let heads = self.members.iter().filter(|m| m.role == Role::Head).count();
        if heads != 1 {
            return comp(&format!("expected exactly one head, found {heads}"));
        }
        if self.members.iter().filter(|m| m.role == Role::Partner).count() > 1 {
            return comp("more than one partner");
        }
        if self.children().any(|c| c.age >= 25) {
            return comp("child aged 25 or over");
        }
        self.validate_amounts()
    }

    pub(crate) fn validate_amounts(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InputValidation(format!(
                "household {} wave {}: {what}",
                self.household_id, self.wave_year
            )))
        };
        for m in &self.members {
            if m.gross_earnings.is_negative() || m.other_income.is_negative() {
                return bad("negative member income");
            }
        }
        if self.rent_incl_heating.is_negative() || self.wealth_class_midpoint.is_negative() {
            return bad("negative housing cost or wealth");
        }
        if !(self.dwelling_sqm >= 0.0 && self.dwelling_sqm.is_finite()) {
            return bad("invalid dwelling size");
        }
        if self.rent_incl_heating > Money::ZERO && self.dwelling_sqm <= 0.0 {
            return bad("positive housing cost with zero dwelling size");
        }
        if !(self.survey_weight >= 0.0 && self.survey_weight.is_finite()) {
            return bad("survey weight must be non-negative");
        }
        if self.interview_date.year() != self.wave_year {
            return bad("interview date outside wave year");
        }
        Ok(())
    }
}

pub fn equivalence_weight(members: impl IntoIterator<Item = (Role, u32)>) -> f64 {
    let mut weight = 0.0;
    let mut head_seen = false;
    for (role, age) in members {
        weight += if role == Role::Head && !head_seen {
            head_seen = true;
            1.0
        } else if age >= 14 {
            0.5
        } else {
            0.3
        };
    }
    weight
}
