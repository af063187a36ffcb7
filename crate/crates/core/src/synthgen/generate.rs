use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SyntheticDgp;
use crate::error::Result;
use crate::estimator::{DesignLayout, PanelObservation};
use crate::money::Money;
use crate::pipeline::{observation, simulated_disposable_income};
use crate::rules::{
    compute_entitlement, Education, EntitlementResult, HouseholdSnapshot, Member, Migration, MunicipalitySize,
    PolicySet, Region, Role, SampleOrigin, Sex,
};
use crate::selection::{apply_cascade, SelectionConfig};
use crate::spells::{covariates_from_history, Deflator, Quarter, QuarterlyHistory, SpellKind, SpellRecord, HISTORY_QUARTERS};

/// Latent quantities of one household-wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub household_id: u64,
    pub wave_year: i32,
    pub eligible: bool,
    /// `x'beta` without the random effect.
    pub index: f64,
    pub nu: f64,
    pub upsilon: f64,
    /// `eligible && index + sigma_nu * nu + upsilon > 0`.
    pub takeup: bool,
}

/// Generated data; vectors of household-waves are aligned and sorted by
/// household and year.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub dgp: SyntheticDgp,
    pub policies: PolicySet,
    pub snapshots: Vec<HouseholdSnapshot>,
    pub entitlements: Vec<EntitlementResult>,
    /// Rows as the estimation pipeline would build them.
    pub observations: Vec<PanelObservation>,
    pub truth: Vec<TruthRecord>,
    pub spells: Vec<SpellRecord>,
    /// Households with administrative linkage.
    pub linked: BTreeSet<u64>,
}

impl SyntheticPanel {
    /// Observations surviving the default selection cascade.
    pub fn estimation_sample(&self) -> Result<Vec<PanelObservation>> {
        let ents: HashMap<(u64, i32), EntitlementResult> = self
            .entitlements
            .iter()
            .map(|e| ((e.household_id, e.wave_year), e.clone()))
            .collect();
        let out = apply_cascade(&self.snapshots, &ents, &self.linked, &SelectionConfig::default())?;
        Ok(self
            .observations
            .iter()
            .zip(&out.dropped_by)
            .filter(|(_, d)| d.is_none())
            .map(|(o, _)| o.clone())
            .collect())
    }
}

#[derive(Default)]
struct HouseholdOut {
    snapshots: Vec<HouseholdSnapshot>,
    entitlements: Vec<EntitlementResult>,
    observations: Vec<PanelObservation>,
    truth: Vec<TruthRecord>,
    spells: Vec<SpellRecord>,
    linked: bool,
}

fn pick(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct Adult {
    person_id: u64,
    role: Role,
    age0: u32,
    employed: bool,
    deviation: f64,
}

/// Household composition and fixed attributes.
struct Profile {
    household_id: u64,
    adults: Vec<Adult>,
    /// `(person_id, age at the first wave)`; may be negative before birth.
    children: Vec<(u64, i32)>,
    level: f64,
    sex_head: Sex,
    education: Education,
    migration: Migration,
    region: Region,
    municipality: MunicipalitySize,
    sample: SampleOrigin,
    home_owner: bool,
    disabled: bool,
    early_retirement: bool,
    other_income: Money,
    housing_cost: Money,
    sqm: f64,
    wealth: Money,
    weight: f64,
}

fn draw_profile(dgp: &SyntheticDgp, household_id: u64, rng: &mut ChaCha8Rng) -> Profile {
    let inc = &dgp.income;
    let kind = pick(rng, &[0.45, 0.15, 0.15, 0.25]);
    let (partner, kids, level) = match kind {
        0 => (false, false, inc.level_single),
        1 => (true, false, inc.level_couple),
        2 => (false, true, inc.level_single_parent),
        _ => (true, true, inc.level_couple_with_children),
    };
    let stationary_sd = inc.innovation_sd / (1.0 - inc.persistence * inc.persistence).sqrt();
    let job_share = inc.job_find / (inc.job_find + 1.0 - inc.job_keep).max(1e-12);
    let head_age = rng.random_range(20..=58u32);
    let mut adults = vec![Adult {
        person_id: household_id * 100 + 1,
        role: Role::Head,
        age0: head_age,
        employed: rng.random::<f64>() < job_share,
        deviation: stationary_sd * normal(rng),
    }];
    if partner {
        let age = (head_age as i32 + rng.random_range(-5..=5)).clamp(18, 64) as u32;
        adults.push(Adult {
            person_id: household_id * 100 + 2,
            role: Role::Partner,
            age0: age,
            employed: rng.random::<f64>() < job_share,
            deviation: stationary_sd * normal(rng),
        });
    }
    let children = if kids {
        let n = 1 + pick(rng, &[0.5, 0.35, 0.15]);
        (0..n).map(|k| (household_id * 100 + 3 + k as u64, rng.random_range(0..=14))).collect()
    } else {
        Vec::new()
    };
    let female_share = if kind == 2 { 0.85 } else { 0.45 };
    let sex_head = if rng.random::<f64>() < female_share { Sex::Female } else { Sex::Male };
    let education = [Education::NoCertificate, Education::Elementary, Education::Secondary, Education::UniversityEntrance]
        [pick(rng, &[0.15, 0.35, 0.35, 0.15])];
    let migration = [Migration::None, Migration::FirstGeneration, Migration::SecondGeneration][pick(rng, &[0.7, 0.2, 0.1])];
    let region = if rng.random::<f64>() < 0.25 { Region::East } else { Region::West };
    let municipality = [
        MunicipalitySize::Under50k,
        MunicipalitySize::Periphery50kPlus,
        MunicipalitySize::Core50kTo500k,
        MunicipalitySize::Core500kPlus,
    ][pick(rng, &[0.35, 0.15, 0.25, 0.25])];
    let sample = if rng.random::<f64>() < dgp.defect_rate {
        SampleOrigin::Refugee
    } else if rng.random::<f64>() < 0.5 {
        SampleOrigin::Admin
    } else {
        SampleOrigin::GenPop
    };
    let home_owner = rng.random::<f64>() < 0.15;
    let persons = adults.len() + children.len();
    let sqm = (35.0 + 15.0 * (persons - 1) as f64 + rng.random_range(-5.0..10.0)).round();
    let per_sqm = if home_owner { rng.random_range(3.0..8.0) } else { rng.random_range(7.0..17.0) };
    let housing_cost = Money::from_euros_f64(sqm * per_sqm);
    let wealth = Money::from_euros([0, 2_500, 10_000, 30_000, 75_000][pick(rng, &[0.45, 0.25, 0.15, 0.1, 0.05])]);
    let other_income = if rng.random::<f64>() < 0.1 {
        Money::from_euros(rng.random_range(100..=300))
    } else {
        Money::ZERO
    };
    Profile {
        household_id,
        adults,
        children,
        level,
        sex_head,
        education,
        migration,
        region,
        municipality,
        sample,
        home_owner,
        disabled: rng.random::<f64>() < 0.08,
        early_retirement: rng.random::<f64>() < 0.04,
        other_income,
        housing_cost,
        sqm,
        wealth,
        weight: (0.4 * normal(rng)).exp(),
    }
}

fn snapshot(p: &Profile, first_year: i32, date: NaiveDate, gross: &[Money]) -> HouseholdSnapshot {
    let year = date.year();
    let shift = year - first_year;
    let mut members: Vec<Member> = p
        .adults
        .iter()
        .zip(gross)
        .map(|(a, g)| {
            let mut m = Member::new(a.person_id, a.role, (a.age0 as i32 + shift).max(0) as u32).with_earnings(*g);
            if a.role == Role::Head {
                m.other_income = p.other_income;
                m.disabled = p.disabled;
                m.early_retirement_self_assessed = p.early_retirement;
            }
            m
        })
        .collect();
    for (id, age0) in &p.children {
        let age = age0 + shift;
        if (0..25).contains(&age) {
            members.push(Member::new(*id, Role::Child, age as u32));
        }
    }
    HouseholdSnapshot {
        household_id: p.household_id,
        wave_year: year,
        interview_date: date,
        members,
        rent_incl_heating: p.housing_cost,
        dwelling_sqm: p.sqm,
        home_owner: p.home_owner,
        wealth_class_midpoint: p.wealth,
        region: p.region,
        municipality_size: p.municipality,
        migration_head: p.migration,
        education_head: p.education,
        sex_head: p.sex_head,
        sample_origin: p.sample,
        reported_ubii: false,
        reported_hb: false,
        reported_scb: false,
        admin_ubii_at_interview: false,
        survey_weight: p.weight,
        reported_net_income: Money::ZERO,
        interview_complete: true,
        communities_of_needs: 1,
        core_family: true,
        partner_referenced: p.adults.len() > 1,
        regressors_complete: true,
    }
}

fn apply_wave_defects(hh: &mut HouseholdSnapshot, rate: f64, rng: &mut ChaCha8Rng) {
    let hit = |rng: &mut ChaCha8Rng| rng.random::<f64>() < rate;
    if hit(rng) {
        hh.interview_complete = false;
    }
    if hit(rng) {
        hh.communities_of_needs = 2;
    }
    if hit(rng) {
        hh.core_family = false;
    }
    if hit(rng) {
        if let Some(m) = hh.members.iter_mut().find(|m| m.role != Role::Child && m.gross_earnings == Money::ZERO) {
            m.gainfully_employed = true;
        }
    }
    if hit(rng) && hh.partner().is_none() {
        hh.partner_referenced = true;
    }
    if hit(rng) {
        hh.members[0].pensioner = true;
    }
    if hit(rng) {
        hh.members[0].student_or_trainee = true;
    }
    if hit(rng) {
        hh.regressors_complete = false;
    }
}

fn simulate_household(
    dgp: &SyntheticDgp,
    policies: &PolicySet,
    deflator: &Deflator,
    layout: &DesignLayout,
    beta: &[f64],
    index: usize,
) -> Result<HouseholdOut> {
    let household_id = index as u64 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(dgp.seed);
    rng.set_stream(household_id);
    let mut p = draw_profile(dgp, household_id, &mut rng);
    let inc = &dgp.income;

    let interviews: Vec<NaiveDate> = dgp
        .wave_years()
        .into_iter()
        .map(|y| {
            let q = Quarter::new(y, rng.random_range(1..=2));
            q.first_day() + Duration::days(rng.random_range(0..q.days()))
        })
        .collect();
    let nu = normal(&mut rng);
    let changing_head = rng.random::<f64>() < dgp.defect_rate;
    let linked = rng.random::<f64>() >= dgp.defect_rate;

    let start = Quarter::new(dgp.first_year - 3, 1);
    let last = Quarter::containing(*interviews.last().expect("at least one wave"));
    let n_quarters = (last.index() - start.index() + 1) as usize;
    let mut receipt_days = vec![0i64; n_quarters];
    let mut wage_cent_days = vec![0i64; n_quarters];
    let mut out = HouseholdOut { linked, ..Default::default() };
    let mut wave = 0;

    for qi in 0..n_quarters {
        let q = start.offset(qi as i32);
        let mut gross = Vec::with_capacity(p.adults.len());
        for a in p.adults.iter_mut() {
            if qi > 0 {
                let u: f64 = rng.random();
                a.employed = if a.employed { u < inc.job_keep } else { u < inc.job_find };
                a.deviation = inc.persistence * a.deviation + inc.innovation_sd * normal(&mut rng);
            }
            let g = if a.employed { Money::from_euros_f64((p.level + a.deviation).exp()) } else { Money::ZERO };
            if g > Money::ZERO {
                wage_cent_days[qi] += g.cents() * q.days();
                out.spells.push(SpellRecord {
                    person_id: a.person_id,
                    household_id,
                    kind: SpellKind::Employment,
                    start: q.first_day(),
                    end: q.last_day(),
                    monthly_gross_wage: g,
                });
            }
            gross.push(g);
        }

        let is_interview = wave < interviews.len() && Quarter::containing(interviews[wave]) == q;
        let date = if is_interview { interviews[wave] } else { q.first_day() };
        let mut hh = snapshot(&p, dgp.first_year, date, &gross);
        let ent = compute_entitlement(&hh, policies.get(q.year())?)?;
        if !is_interview {
            let latent = dgp.history_intercept
                + dgp.history_gap * ent.relative_income_gap
                + dgp.history_nu_loading * dgp.sigma_nu * nu
                + normal(&mut rng);
            if ent.eligible_ubii && latent > 0.0 {
                receipt_days[qi] = q.days();
            }
            continue;
        }

        hh.reported_hb = ent.hb_amount > Money::ZERO && rng.random::<f64>() < 0.8;
        hh.reported_scb = ent.scb_amount > Money::ZERO && rng.random::<f64>() < 0.8;
        let history = QuarterlyHistory {
            first: q.offset(-(HISTORY_QUARTERS as i32)),
            receipt_days: receipt_days[qi - HISTORY_QUARTERS..qi].to_vec(),
            wage_cent_days: wage_cent_days[qi - HISTORY_QUARTERS..qi].to_vec(),
        };
        let lt = covariates_from_history(&history, q, hh.equivalence_weight(), deflator, ent.need_total)?;
        let mut obs = observation(&hh, &ent, lt)?;
        let xb: f64 = layout.row(&obs).iter().zip(beta).map(|(x, b)| x * b).sum();
        let upsilon = normal(&mut rng);
        let takeup = ent.eligible_ubii && xb + dgp.sigma_nu * nu + upsilon > 0.0;
        let admin = takeup || (!ent.eligible_ubii && rng.random::<f64>() < dgp.ineligible_receipt_rate);
        let flip: f64 = rng.random();
        hh.admin_ubii_at_interview = admin;
        hh.reported_ubii = if admin { flip >= dgp.underreport_rate } else { flip < dgp.overreport_rate };
        obs.takeup = admin;
        if admin {
            receipt_days[qi] = q.days();
        }
        let disposable = simulated_disposable_income(&hh, &ent, policies)?;
        hh.reported_net_income = disposable.scale((0.1 * normal(&mut rng)).exp());
        apply_wave_defects(&mut hh, dgp.defect_rate, &mut rng);
        if changing_head && wave > 0 {
            hh.members[0].person_id += 50;
        }

        out.truth.push(TruthRecord {
            household_id,
            wave_year: hh.wave_year,
            eligible: ent.eligible_ubii,
            index: xb,
            nu,
            upsilon,
            takeup,
        });
        out.snapshots.push(hh);
        out.entitlements.push(ent);
        out.observations.push(obs);
        wave += 1;

        let leave = dgp.attrition + if ent_non_takeup(&out) { dgp.attrition_non_takeup } else { 0.0 };
        if wave < interviews.len() && rng.random::<f64>() < leave {
            receipt_days.truncate(qi + 1);
            break;
        }
    }

    // Consecutive receipt quarters form one spell of the head.
    let head = p.adults[0].person_id;
    let mut run: Option<(Quarter, Quarter)> = None;
    let flush = |run: &mut Option<(Quarter, Quarter)>, spells: &mut Vec<SpellRecord>| {
        if let Some((a, b)) = run.take() {
            spells.push(SpellRecord {
                person_id: head,
                household_id,
                kind: SpellKind::UbiiReceipt,
                start: a.first_day(),
                end: b.last_day(),
                monthly_gross_wage: Money::ZERO,
            });
        }
    };
    for (qi, days) in receipt_days.iter().enumerate() {
        let q = start.offset(qi as i32);
        if *days > 0 {
            run = Some(match run {
                Some((a, _)) => (a, q),
                None => (q, q),
            });
        } else {
            flush(&mut run, &mut out.spells);
        }
    }
    flush(&mut run, &mut out.spells);
    Ok(out)
}

fn ent_non_takeup(out: &HouseholdOut) -> bool {
    out.truth.last().is_some_and(|t| t.eligible && !t.takeup)
}

/// Simulates the panel described by `dgp`. Households are generated from
/// independent random streams, so the result does not depend on the
/// number of worker threads.
pub fn generate(dgp: &SyntheticDgp) -> Result<SyntheticPanel> {
    dgp.validate()?;
    let policies = PolicySet::indexed_default(dgp.first_year - 3..=dgp.last_year());
    let deflator = Deflator::from_policies(&policies);
    let layout = dgp.truth_layout();
    let beta: Vec<f64> = layout
        .columns
        .iter()
        .map(|c| dgp.beta.get(&c.name).copied().unwrap_or(0.0))
        .collect();
    let parts: Vec<HouseholdOut> = (0..dgp.households)
        .into_par_iter()
        .map(|i| simulate_household(dgp, &policies, &deflator, &layout, &beta, i))
        .collect::<Result<_>>()?;

    let mut panel = SyntheticPanel {
        dgp: dgp.clone(),
        policies,
        snapshots: Vec::new(),
        entitlements: Vec::new(),
        observations: Vec::new(),
        truth: Vec::new(),
        spells: Vec::new(),
        linked: BTreeSet::new(),
    };
    for (i, part) in parts.into_iter().enumerate() {
        if part.linked {
            panel.linked.insert(i as u64 + 1);
        }
        panel.snapshots.extend(part.snapshots);
        panel.entitlements.extend(part.entitlements);
        panel.observations.extend(part.observations);
        panel.truth.extend(part.truth);
        panel.spells.extend(part.spells);
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::normal;
    use crate::pipeline::build_observations;
    use crate::spells::SpellIndex;

    fn small() -> SyntheticDgp {
        SyntheticDgp {
            households: 150,
            waves: 3,
            underreport_rate: 0.1,
            overreport_rate: 0.05,
            ineligible_receipt_rate: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.spells, b.spells);
        assert_eq!(a.truth, b.truth);
        let c = generate(&SyntheticDgp { seed: 7, ..small() }).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn latent_index_reproduces_outcomes() {
        let dgp = small();
        let p = generate(&dgp).unwrap();
        let layout = dgp.truth_layout();
        let beta: Vec<f64> = layout.columns.iter().map(|c| dgp.beta.get(&c.name).copied().unwrap_or(0.0)).collect();
        for (t, o) in p.truth.iter().zip(&p.observations) {
            let xb: f64 = layout.row(o).iter().zip(&beta).map(|(x, b)| x * b).sum();
            assert_eq!(xb, t.index);
            assert_eq!(t.takeup, t.eligible && xb + dgp.sigma_nu * t.nu + t.upsilon > 0.0);
            if t.takeup {
                assert!(o.takeup);
            }
        }
    }

    #[test]
    fn pipeline_rebuilds_the_generated_rows() {
        let p = generate(&small()).unwrap();
        let index = SpellIndex::new(p.spells.clone()).unwrap();
        let rebuilt = build_observations(&p.snapshots, &p.entitlements, &index, &Deflator::from_policies(&p.policies)).unwrap();
        assert_eq!(rebuilt, p.observations);
        for hh in &p.snapshots {
            assert_eq!(index.receipt_on(hh.household_id, hh.interview_date), hh.admin_ubii_at_interview);
        }
    }

    #[test]
    fn no_misreporting_means_reports_match() {
        let p = generate(&SyntheticDgp { households: 100, ..Default::default() }).unwrap();
        assert!(p.snapshots.iter().all(|h| h.reported_ubii == h.admin_ubii_at_interview));
    }

    #[test]
    fn intercept_only_rate() {
        let dgp = SyntheticDgp {
            households: 2000,
            waves: 2,
            sigma_nu: 0.0,
            beta: [("intercept".to_string(), 0.3)].into_iter().collect(),
            ..Default::default()
        };
        let p = generate(&dgp).unwrap();
        let elig: Vec<&TruthRecord> = p.truth.iter().filter(|t| t.eligible).collect();
        let n = elig.len() as f64;
        let rate = elig.iter().filter(|t| t.takeup).count() as f64 / n;
        let target = normal::cdf(0.3);
        let se = (target * (1.0 - target) / n).sqrt();
        assert!((rate - target).abs() < 3.0 * se, "{rate} vs {target}");
    }

    #[test]
    fn entitlements_respect_rule_invariants() {
        let p = generate(&small()).unwrap();
        for e in &p.entitlements {
            assert!((0.0..=1.0).contains(&e.relative_income_gap));
            assert_eq!(e.entitlement, (e.need_total - e.countable_income).max(Money::ZERO));
            assert!(!(e.eligible_ubii && e.hb_amount + e.scb_amount > e.entitlement));
        }
        let eligible = p.entitlements.iter().filter(|e| e.eligible_ubii).count();
        assert!(eligible > p.entitlements.len() / 3 && eligible < p.entitlements.len());
    }
}
