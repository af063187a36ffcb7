//! Estimation rows and the model matrices built from them.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::{Education, Migration, MunicipalitySize, Region, SampleOrigin, Sex};
use crate::spells::LongTermCovariates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HouseholdType {
    Single,
    CoupleNoChildren,
    SingleParent,
    CoupleWithChildren,
}

/// One household-wave row of the estimation sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub household_id: u64,
    pub wave_year: i32,
    /// Administrative (corrected) receipt.
    pub takeup: bool,
    pub weight: f64,
    pub relative_income_gap: f64,
    pub age_head: u32,
    pub education_head: Education,
    pub household_type: HouseholdType,
    pub child_under4: bool,
    pub sex_head: Sex,
    pub migration_head: Migration,
    pub disabled: bool,
    pub early_retirement: bool,
    pub home_owner: bool,
    pub region: Region,
    pub municipality_size: MunicipalitySize,
    pub sample_origin: SampleOrigin,
    pub other_benefit_reported: bool,
    pub long_term: LongTermCovariates,
}

impl PanelObservation {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InputValidation(format!(
                "observation {}/{}: {what}",
                self.household_id, self.wave_year
            )))
        };
        if !(0.0..=1.0).contains(&self.relative_income_gap) {
            return bad("relative income gap outside [0,1]");
        }
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return bad("weight must be non-negative");
        }
        if !self.long_term.is_finite() {
            return bad("non-finite long-term covariate");
        }
        Ok(())
    }
}

/// Groups of regressors that enter or leave a specification together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Relative income gap and its square.
    IncomeGap,
    AgeGroup,
    Education,
    HouseholdType,
    ChildUnder4,
    FemaleHead,
    Migration,
    Disability,
    EarlyRetirement,
    HomeOwner,
    East,
    Municipality,
    GenPop,
    OtherBenefit,
    ReceiptShares,
    IncomeHistory,
    ShockVolatility,
    WaveDummies,
}

impl Block {
    pub const BASELINE: [Block; 15] = [
        Block::IncomeGap,
        Block::AgeGroup,
        Block::Education,
        Block::HouseholdType,
        Block::ChildUnder4,
        Block::FemaleHead,
        Block::Migration,
        Block::Disability,
        Block::EarlyRetirement,
        Block::HomeOwner,
        Block::East,
        Block::Municipality,
        Block::GenPop,
        Block::OtherBenefit,
        Block::WaveDummies,
    ];
}

/// Nested take-up specifications: each adds one group of long-term
/// regressors to the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    M0,
    M1,
    M2,
    M3,
}

impl ModelTag {
    pub const ALL: [ModelTag; 4] = [ModelTag::M0, ModelTag::M1, ModelTag::M2, ModelTag::M3];

    pub fn spec(self) -> ModelSpec {
        let mut blocks = Block::BASELINE.to_vec();
        if self >= ModelTag::M1 {
            blocks.push(Block::ReceiptShares);
        }
        if self >= ModelTag::M2 {
            blocks.push(Block::IncomeHistory);
        }
        if self >= ModelTag::M3 {
            blocks.push(Block::ShockVolatility);
        }
        ModelSpec { blocks }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelTag::M0 => "m0",
            ModelTag::M1 => "m1",
            ModelTag::M2 => "m2",
            ModelTag::M3 => "m3",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "m0" | "baseline" => Ok(ModelTag::M0),
            "m1" => Ok(ModelTag::M1),
            "m2" => Ok(ModelTag::M2),
            "m3" => Ok(ModelTag::M3),
            _ => Err(format!("unknown model `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub blocks: Vec<Block>,
}

impl ModelSpec {
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Self {
        let set: BTreeSet<Block> = blocks.into_iter().collect();
        ModelSpec {
            blocks: set.into_iter().collect(),
        }
    }

    pub fn has(&self, block: Block) -> bool {
        self.blocks.contains(&block)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    Intercept,
    Continuous,
    GapLinear,
    GapSquare,
    /// Member of a one-hot block whose reference category is omitted.
    Indicator { block: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
}

impl Column {
    fn continuous(name: &str) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Continuous,
        }
    }

    fn indicator(block: &str, name: &str) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Indicator {
                block: block.into(),
            },
        }
    }
}

pub const GAP: &str = "relative_income_gap";
pub const GAP_SQ: &str = "relative_income_gap_sq";

fn age_group(age: u32) -> usize {
    match age {
        0..=24 => 0,
        25..=34 => 1,
        35..=44 => 2,
        45..=54 => 3,
        _ => 4,
    }
}

/// Column layout and per-row encoding for a specification. Reference
/// categories: age 15-24, no school certificate, single household, male
/// head, no migration background, west, under 50,000 residents, Admin
/// sample, first wave year.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignLayout {
    pub spec: ModelSpec,
    pub wave_years: Vec<i32>,
    pub columns: Vec<Column>,
}

impl DesignLayout {
    pub fn new(spec: &ModelSpec, wave_years: impl IntoIterator<Item = i32>) -> Self {
        let years: BTreeSet<i32> = wave_years.into_iter().collect();
        let wave_years: Vec<i32> = years.into_iter().collect();
        let mut columns = vec![Column {
            name: "intercept".into(),
            role: ColumnRole::Intercept,
        }];
        for block in &spec.blocks {
            match block {
                Block::IncomeGap => {
                    columns.push(Column { name: GAP.into(), role: ColumnRole::GapLinear });
                    columns.push(Column { name: GAP_SQ.into(), role: ColumnRole::GapSquare });
                }
                Block::AgeGroup => {
                    for n in ["age_25_34", "age_35_44", "age_45_54", "age_55_plus"] {
                        columns.push(Column::indicator("age_group", n));
                    }
                }
                Block::Education => {
                    for n in ["educ_elementary", "educ_secondary", "educ_university_entrance"] {
                        columns.push(Column::indicator("education", n));
                    }
                }
                Block::HouseholdType => {
                    for n in ["hh_couple_no_children", "hh_single_parent", "hh_couple_with_children"] {
                        columns.push(Column::indicator("household_type", n));
                    }
                }
                Block::ChildUnder4 => columns.push(Column::indicator("child_under4", "child_under4")),
                Block::FemaleHead => columns.push(Column::indicator("female_head", "female_head")),
                Block::Migration => {
                    for n in ["migration_first_gen", "migration_second_gen"] {
                        columns.push(Column::indicator("migration", n));
                    }
                }
                Block::Disability => columns.push(Column::indicator("disabled", "disabled")),
                Block::EarlyRetirement => {
                    columns.push(Column::indicator("early_retirement", "early_retirement"))
                }
                Block::HomeOwner => columns.push(Column::indicator("home_owner", "home_owner")),
                Block::East => columns.push(Column::indicator("east", "east")),
                Block::Municipality => {
                    for n in ["muni_periphery_50k", "muni_core_50k_500k", "muni_core_500k_plus"] {
                        columns.push(Column::indicator("municipality", n));
                    }
                }
                Block::GenPop => columns.push(Column::indicator("genpop", "genpop_sample")),
                Block::OtherBenefit => {
                    columns.push(Column::indicator("other_benefit", "other_benefit_reported"))
                }
                Block::ReceiptShares => {
                    for n in ["receipt_share_lag1", "receipt_share_lag2", "receipt_share_lag3"] {
                        columns.push(Column::continuous(n));
                    }
                }
                Block::IncomeHistory => {
                    for n in ["income_lag1_k", "income_lag2_k", "income_lag3_k"] {
                        columns.push(Column::continuous(n));
                    }
                }
                Block::ShockVolatility => {
                    columns.push(Column::continuous("income_shock"));
                    columns.push(Column::continuous("income_volatility_k"));
                }
                Block::WaveDummies => {
                    for y in wave_years.iter().skip(1) {
                        columns.push(Column::indicator("wave", &format!("wave_{y}")));
                    }
                }
            }
        }
        DesignLayout {
            spec: spec.clone(),
            wave_years,
            columns,
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Encodes one observation. Incomes enter in thousands of euros a month.
    pub fn row(&self, o: &PanelObservation) -> Vec<f64> {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        let one_hot = |k: usize, levels: usize| (1..levels).map(move |l| b(k == l));
        let mut row = Vec::with_capacity(self.width());
        row.push(1.0);
        let lt = &o.long_term;
        for block in &self.spec.blocks {
            match block {
                Block::IncomeGap => {
                    row.push(o.relative_income_gap);
                    row.push(o.relative_income_gap * o.relative_income_gap);
                }
                Block::AgeGroup => row.extend(one_hot(age_group(o.age_head), 5)),
                Block::Education => {
                    let k = match o.education_head {
                        Education::NoCertificate => 0,
                        Education::Elementary => 1,
                        Education::Secondary => 2,
                        Education::UniversityEntrance => 3,
                    };
                    row.extend(one_hot(k, 4));
                }
                Block::HouseholdType => {
                    let k = match o.household_type {
                        HouseholdType::Single => 0,
                        HouseholdType::CoupleNoChildren => 1,
                        HouseholdType::SingleParent => 2,
                        HouseholdType::CoupleWithChildren => 3,
                    };
                    row.extend(one_hot(k, 4));
                }
                Block::ChildUnder4 => row.push(b(o.child_under4)),
                Block::FemaleHead => row.push(b(o.sex_head == Sex::Female)),
                Block::Migration => {
                    let k = match o.migration_head {
                        Migration::None => 0,
                        Migration::FirstGeneration => 1,
                        Migration::SecondGeneration => 2,
                    };
                    row.extend(one_hot(k, 3));
                }
                Block::Disability => row.push(b(o.disabled)),
                Block::EarlyRetirement => row.push(b(o.early_retirement)),
                Block::HomeOwner => row.push(b(o.home_owner)),
                Block::East => row.push(b(o.region == Region::East)),
                Block::Municipality => {
                    let k = match o.municipality_size {
                        MunicipalitySize::Under50k => 0,
                        MunicipalitySize::Periphery50kPlus => 1,
                        MunicipalitySize::Core50kTo500k => 2,
                        MunicipalitySize::Core500kPlus => 3,
                    };
                    row.extend(one_hot(k, 4));
                }
                Block::GenPop => row.push(b(o.sample_origin == SampleOrigin::GenPop)),
                Block::OtherBenefit => row.push(b(o.other_benefit_reported)),
                Block::ReceiptShares => {
                    row.extend([lt.receipt_share_lag1, lt.receipt_share_lag2, lt.receipt_share_lag3])
                }
                Block::IncomeHistory => row.extend([
                    lt.income_lag1 / 1000.0,
                    lt.income_lag2 / 1000.0,
                    lt.income_lag3 / 1000.0,
                ]),
                Block::ShockVolatility => {
                    row.push(lt.income_shock);
                    row.push(lt.income_volatility / 1000.0);
                }
                Block::WaveDummies => {
                    for y in self.wave_years.iter().skip(1) {
                        row.push(b(o.wave_year == *y));
                    }
                }
            }
        }
        row
    }
}

/// Model matrix with rows grouped contiguously by household.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<Column>,
    /// Row-major, `n_obs * width`.
    pub x: Vec<f64>,
    pub y: Vec<bool>,
    pub weights: Vec<f64>,
    pub household_ids: Vec<u64>,
    pub wave_years: Vec<i32>,
    pub groups: Vec<Range<usize>>,
}

impl Dataset {
    /// Builds and validates a dataset. Rows are sorted by household and
    /// wave; the design must have full column rank.
    pub fn new(
        columns: Vec<Column>,
        mut rows: Vec<(u64, i32, bool, Vec<f64>, f64)>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InputValidation("estimation sample is empty".into()));
        }
        let p = columns.len();
        rows.sort_by_key(|r| (r.0, r.1));
        let n = rows.len();
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut household_ids = Vec::with_capacity(n);
        let mut wave_years = Vec::with_capacity(n);
        let mut groups = Vec::new();
        let mut start = 0;
        for (i, (hh, year, takeup, row, w)) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::InputValidation(format!(
                    "row {i} has {} values for {p} columns",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("non-finite regressor in row {i}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InputValidation(format!("invalid weight in row {i}")));
            }
            if i > 0 && household_ids[i - 1] != hh {
                groups.push(start..i);
                start = i;
            }
            x.extend(row);
            y.push(takeup);
            weights.push(w);
            household_ids.push(hh);
            wave_years.push(year);
        }
        groups.push(start..n);
        let data = Dataset {
            columns,
            x,
            y,
            weights,
            household_ids,
            wave_years,
            groups,
        };
        data.check_rank()?;
        Ok(data)
    }

    pub fn from_observations(obs: &[PanelObservation], layout: &DesignLayout, weighted: bool) -> Result<Self> {
        let rows = obs
            .iter()
            .map(|o| {
                o.validate()?;
                let w = if weighted { o.weight } else { 1.0 };
                Ok((o.household_id, o.wave_year, o.takeup, layout.row(o), w))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(layout.columns.clone(), rows)
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.width();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Mean observation weight of each household.
    pub fn group_weight(&self, g: &Range<usize>) -> f64 {
        self.weights[g.clone()].iter().sum::<f64>() / g.len() as f64
    }

    /// Incremental Cholesky on the scaled cross-product matrix; a column
    /// whose residual norm vanishes is a linear combination of earlier ones.
    fn check_rank(&self) -> Result<()> {
        let p = self.width();
        let n = self.n_obs();
        let mut gram = vec![0.0; p * p];
        for i in 0..n {
            let r = self.row(i);
            for a in 0..p {
                if r[a] == 0.0 {
                    continue;
                }
                for c in a..p {
                    gram[a * p + c] += r[a] * r[c];
                }
            }
        }
        let diag: Vec<f64> = (0..p).map(|a| gram[a * p + a]).collect();
        let mut l = vec![0.0; p * p];
        let mut dependent = Vec::new();
        let mut kept: Vec<usize> = Vec::new();
        for j in 0..p {
            if diag[j] <= 0.0 {
                dependent.push(self.columns[j].name.clone());
                continue;
            }
            let scaled = |a: usize, c: usize| {
                let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
                gram[lo * p + hi] / (diag[a] * diag[c]).sqrt()
            };
            let mut row_l = vec![0.0; p];
            for &k in &kept {
                let mut s = scaled(j, k);
                for &m in &kept {
                    if m >= k {
                        break;
                    }
                    s -= row_l[m] * l[k * p + m];
                }
                row_l[k] = s / l[k * p + k];
            }
            let resid = 1.0 - kept.iter().map(|&k| row_l[k] * row_l[k]).sum::<f64>();
            if resid < 1e-10 {
                dependent.push(self.columns[j].name.clone());
                continue;
            }
            row_l[j] = resid.sqrt();
            l[j * p..(j + 1) * p].copy_from_slice(&row_l);
            kept.push(j);
        }
        if dependent.is_empty() {
            Ok(())
        } else {
            Err(Error::SingularDesign { columns: dependent })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_columns(names: &[&str]) -> Vec<Column> {
        names.iter().map(|n| Column::continuous(n)).collect()
    }

    #[test]
    fn detects_collinear_column() {
        let cols = simple_columns(&["a", "b", "c"]);
        let rows = (0..10)
            .map(|i| {
                let a = 1.0;
                let b = i as f64;
                (i as u64, 2020, i % 2 == 0, vec![a, b, 2.0 * a - 0.5 * b], 1.0)
            })
            .collect();
        match Dataset::new(cols, rows) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["c".to_string()]),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn detects_all_zero_column() {
        let cols = simple_columns(&["a", "z"]);
        let rows = (0..5).map(|i| (i, 2020, true, vec![1.0, 0.0], 1.0)).collect();
        assert!(matches!(Dataset::new(cols, rows), Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn groups_are_contiguous_per_household() {
        let cols = simple_columns(&["a", "b"]);
        let rows = vec![
            (2, 2021, true, vec![1.0, 0.3], 1.0),
            (1, 2020, false, vec![1.0, 0.1], 2.0),
            (2, 2020, true, vec![1.0, 0.7], 3.0),
            (1, 2021, true, vec![1.0, 0.2], 4.0),
        ];
        let d = Dataset::new(cols, rows).unwrap();
        assert_eq!(d.groups, vec![0..2, 2..4]);
        assert_eq!(d.household_ids, vec![1, 1, 2, 2]);
        assert_eq!(d.wave_years, vec![2020, 2021, 2020, 2021]);
        assert_eq!(d.group_weight(&d.groups[1]), 2.0);
    }

    #[test]
    fn model_tags_nest() {
        let m0 = ModelTag::M0.spec();
        let m3 = ModelTag::M3.spec();
        assert!(!m0.has(Block::ReceiptShares));
        assert!(m3.has(Block::ReceiptShares) && m3.has(Block::IncomeHistory) && m3.has(Block::ShockVolatility));
        let l0 = DesignLayout::new(&m0, [2019, 2020]);
        let l3 = DesignLayout::new(&m3, [2019, 2020]);
        assert_eq!(l3.width(), l0.width() + 8);
        assert!(l0.column_index("wave_2020").is_some());
        assert!(l0.column_index("wave_2019").is_none());
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(
            Dataset::new(simple_columns(&["a"]), vec![]),
            Err(Error::InputValidation(_))
        ));
    }
}
