//! Seeded synthetic register, survey extract, name table and ground truth.
//!
//! Every record gets a background kind drawn from the target shares. Inside
//! the BP = CIT = 1 stratum the split between kind 0 and kind 1 comes from a
//! logistic model of PA on the predictors; its intercept is solved so that the
//! expected kind-1 count matches the target share. Survey respondents are
//! drawn without replacement with weights `exp(offsets)`, which plants the
//! opt-in selection bias.

mod names;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use mbid_core::domain::{compute_delta_type, BackgroundKind};
use mbid_ingest::{
    write_admin, write_name_table, write_survey, AdminRecord, CountryCode, CourseLevel, Employment,
    Gender, IngestError, NameFrequencyTable, SurveyRecord,
};

pub const ADMIN_FILE: &str = "admin.csv";
pub const SURVEY_FILE: &str = "survey_eligible.csv";
pub const SCREENED_OUT_FILE: &str = "survey_screened_out.csv";
pub const NAMES_FILE: &str = "names.csv";
pub const TRUTH_FILE: &str = "truth.csv";

/// Academic year of the register snapshot; `enrollment_year` is derived from
/// it and `years_enrolled`.
const SNAPSHOT_YEAR: i32 = 2022;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Categorical and count marginals of the predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Marginals {
    pub male_share: f64,
    /// Order: worker_student, student_worker, student, not_available.
    pub employment: [f64; 4],
    /// Order: bachelor, master, bachelor_and_master.
    pub course_level: [f64; 3],
    /// `years_enrolled = 1 + Poisson(Gamma(shape, scale))`, capped.
    pub years_gamma_shape: f64,
    pub years_gamma_scale: f64,
    pub years_max: u32,
    /// `ects_earned` is 0 with this probability, otherwise a rounded normal
    /// clipped to `[0, ects_max]`.
    pub ects_zero_share: f64,
    pub ects_mean: f64,
    pub ects_sd: f64,
    pub ects_max: u32,
}

impl Default for Marginals {
    fn default() -> Self {
        Self {
            male_share: 0.36,
            employment: [0.1022, 0.1767, 0.7155, 0.0056],
            course_level: [0.6947, 0.1541, 0.1512],
            years_gamma_shape: 0.704,
            years_gamma_scale: 2.61,
            years_max: 24,
            ects_zero_share: 0.15,
            ects_mean: 37.0,
            ects_sd: 18.0,
            ects_max: 113,
        }
    }
}

/// Share of records whose given name is common, per group. Inside the
/// BP = CIT = 1 stratum the name is drawn before PA and drives it through the
/// PA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NameShares {
    pub stratum_uncommon: f64,
    /// Born abroad to Italian parents, Italian citizen.
    pub abroad_italian_parents_common: f64,
    pub kind2_common: f64,
    pub kind3_common: f64,
    pub kind4_common: f64,
}

impl Default for NameShares {
    fn default() -> Self {
        Self {
            stratum_uncommon: 0.08,
            abroad_italian_parents_common: 0.9,
            kind2_common: 0.15,
            kind3_common: 0.5,
            kind4_common: 0.15,
        }
    }
}

/// Raw-scale coefficients of the PA model, `P(PA = 0 | x) = logistic(b0 +
/// signal_scale * beta . x)`. Levels absent here are the references: female,
/// student, bachelor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaModel {
    pub male: f64,
    pub worker_student: f64,
    pub student_worker: f64,
    pub not_available: f64,
    pub master: f64,
    pub bachelor_and_master: f64,
    pub common_name: f64,
    pub years_enrolled: f64,
    pub ects_earned: f64,
    /// 0 removes every dependence of PA on the predictors.
    pub signal_scale: f64,
}

impl Default for PaModel {
    fn default() -> Self {
        Self {
            male: 0.1,
            worker_student: 0.15,
            student_worker: 0.1,
            not_available: 0.0,
            master: 0.15,
            bachelor_and_master: -0.1,
            common_name: -3.5,
            years_enrolled: 0.05,
            ects_earned: -0.003,
            signal_scale: 1.0,
        }
    }
}

impl PaModel {
    /// Coefficients in feature-schema column order.
    pub fn coefficients(&self) -> [f64; 9] {
        [
            self.male,
            self.worker_student,
            self.student_worker,
            self.not_available,
            self.master,
            self.bachelor_and_master,
            self.common_name,
            self.years_enrolled,
            self.ects_earned,
        ]
        .map(|b| b * self.signal_scale)
    }

    pub fn linear_predictor(&self, rec: &AdminRecord, common_name: bool) -> f64 {
        raw_predictors(rec, common_name)
            .iter()
            .zip(self.coefficients())
            .map(|(x, b)| x * b)
            .sum()
    }
}

/// Unstandardized predictors in feature-schema column order.
pub fn raw_predictors(rec: &AdminRecord, common_name: bool) -> [f64; 9] {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    [
        ind(rec.gender == Gender::M),
        ind(rec.employment == Employment::WorkerStudent),
        ind(rec.employment == Employment::StudentWorker),
        ind(rec.employment == Employment::NotAvailable),
        ind(rec.course_level == CourseLevel::Master),
        ind(rec.course_level == CourseLevel::BachelorAndMaster),
        ind(common_name),
        f64::from(rec.years_enrolled),
        f64::from(rec.ects_earned),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Department {
    pub name: String,
    pub share: f64,
    /// Log-odds shift of survey response.
    pub response_offset: f64,
}

/// Survey sizes and the opt-in response model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyConfig {
    /// Eligible respondents with kind 1.
    pub kind1_respondents: usize,
    /// Eligible respondents with kind 2, 3 or 4.
    pub other_member_respondents: usize,
    /// Kind-0 respondents with BP = CIT = 1 stopped at screening.
    pub screened_out: usize,
    /// Log-odds shift of response for male students.
    pub male_offset: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            kind1_respondents: 312,
            other_member_respondents: 382,
            screened_out: 402,
            male_offset: -0.68,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_register: usize,
    /// Percent of all students per kind 0..=4.
    pub kind_shares: [f64; 5],
    /// Fraction of kind 0 born abroad to Italian parents with Italian
    /// citizenship, (0,1,1).
    pub abroad_italian_parents: f64,
    pub marginals: Marginals,
    pub names: NameShares,
    pub pa_model: PaModel,
    pub departments: Vec<Department>,
    pub survey: SurveyConfig,
}

fn dept(name: &str, share: f64, response_offset: f64) -> Department {
    Department {
        name: name.to_string(),
        share,
        response_offset,
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_register: 36_382,
            kind_shares: [84.91, 7.77, 0.36, 1.82, 5.14],
            abroad_italian_parents: 0.001,
            marginals: Marginals::default(),
            names: NameShares::default(),
            pa_model: PaModel::default(),
            departments: vec![
                dept("economics", 0.18, -0.45),
                dept("law", 0.10, 0.0),
                dept("medicine", 0.14, -0.2),
                dept("psychology", 0.12, 0.45),
                dept("sciences", 0.16, 0.1),
                dept("sociology", 0.10, 0.3),
                dept("education", 0.12, 0.25),
                dept("computer_science", 0.08, -0.3),
            ],
            survey: SurveyConfig::default(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SynthError> {
    if cond {
        Ok(())
    } else {
        Err(SynthError::InfeasibleConfig(msg()))
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn sums_to_one(ps: &[f64]) -> bool {
    ps.iter().all(|&p| is_prob(p)) && (ps.iter().sum::<f64>() - 1.0).abs() <= 1e-6
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        check(self.n_register >= 100, || {
            format!("n_register = {} is below 100", self.n_register)
        })?;
        let total: f64 = self.kind_shares.iter().sum();
        check(
            self.kind_shares.iter().all(|&s| s >= 0.0) && (total - 100.0).abs() <= 0.01,
            || format!("kind shares sum to {total}, expected 100 +/- 0.01"),
        )?;
        check(self.kind_shares[0] * (1.0 - self.abroad_italian_parents) + self.kind_shares[1] > 0.0, || {
            "the BP = CIT = 1 stratum is empty".into()
        })?;
        let m = &self.marginals;
        check(is_prob(m.male_share), || "male_share outside [0, 1]".into())?;
        check(sums_to_one(&m.employment), || "employment shares must sum to 1".into())?;
        check(sums_to_one(&m.course_level), || "course_level shares must sum to 1".into())?;
        check(m.years_gamma_shape > 0.0 && m.years_gamma_scale > 0.0 && m.years_max >= 1, || {
            "years distribution needs positive shape, scale and years_max".into()
        })?;
        check(is_prob(m.ects_zero_share) && m.ects_sd > 0.0, || {
            "ects distribution needs a zero share in [0, 1] and positive sd".into()
        })?;
        let n = &self.names;
        check(
            [
                self.abroad_italian_parents,
                n.stratum_uncommon,
                n.abroad_italian_parents_common,
                n.kind2_common,
                n.kind3_common,
                n.kind4_common,
            ]
            .iter()
            .all(|&p| is_prob(p)),
            || "name shares and abroad_italian_parents must lie in [0, 1]".into(),
        )?;
        check(
            self.pa_model.coefficients().iter().all(|b| b.is_finite()),
            || "PA-model coefficients must be finite".into(),
        )?;
        let shares: Vec<f64> = self.departments.iter().map(|d| d.share).collect();
        check(!shares.is_empty() && sums_to_one(&shares), || {
            "department shares must be non-empty and sum to 1".into()
        })?;
        check(
            self.departments.iter().all(|d| {
                mbid_ingest::standardize::department(&d.name).as_deref() == Some(d.name.as_str())
                    && d.response_offset.is_finite()
            }),
            || "department names must be lowercase snake_case with finite offsets".into(),
        )?;
        check(
            self.survey.male_offset.is_finite() && self.survey.kind1_respondents > 0 && self.survey.screened_out > 0,
            || "survey needs kind-1 and screened-out respondents and a finite male offset".into(),
        )
    }
}

/// Ground truth for one register record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub link_key: String,
    pub bp: u8,
    pub cit: u8,
    pub pa: u8,
    pub delta: u8,
    pub kind: u8,
    /// Answered the questionnaire as an eligible student.
    pub responded: u8,
    pub screened_out: u8,
}

impl TruthRecord {
    pub fn kind(&self) -> BackgroundKind {
        BackgroundKind::from_code(self.kind).expect("valid kind code")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub admin: Vec<AdminRecord>,
    pub survey: Vec<SurveyRecord>,
    pub screened_out: Vec<SurveyRecord>,
    pub names: NameFrequencyTable,
    pub truth: Vec<TruthRecord>,
    /// Solved intercept of the PA model.
    pub pa_intercept: f64,
}

impl SyntheticBundle {
    /// Writes the five files into `dir`, which must exist.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        let open = |name: &str| -> Result<BufWriter<File>, SynthError> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };
        write_admin(open(ADMIN_FILE)?, &self.admin)?;
        write_survey(open(SURVEY_FILE)?, &self.survey)?;
        write_survey(open(SCREENED_OUT_FILE)?, &self.screened_out)?;
        write_name_table(open(NAMES_FILE)?, &self.names)?;
        write_truth(open(TRUTH_FILE)?, &self.truth)?;
        Ok(())
    }

    pub fn member_count(&self) -> usize {
        self.truth.iter().filter(|t| t.delta == 1).count()
    }

    pub fn kind_counts(&self) -> [u64; 5] {
        let mut counts = [0u64; 5];
        for t in &self.truth {
            counts[t.kind as usize] += 1;
        }
        counts
    }
}

pub fn write_truth<W: Write>(writer: W, truth: &[TruthRecord]) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(writer);
    for t in truth {
        w.serialize(t).map_err(|e| SynthError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>, SynthError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SynthError::Io(e.into()))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| SynthError::Io(e.into()))
}

/// The bundled reference table of given-name counts.
pub fn name_table() -> NameFrequencyTable {
    let italian = names::ITALIAN_FEMALE
        .iter()
        .enumerate()
        .chain(names::ITALIAN_MALE.iter().enumerate())
        .map(|(rank, n)| (*n, names::italian_count(rank)));
    let foreign = names::FOREIGN_FEMALE
        .iter()
        .enumerate()
        .chain(names::FOREIGN_MALE.iter().enumerate())
        .filter_map(|(rank, n)| names::foreign_count(rank).map(|c| (*n, c)));
    NameFrequencyTable::from_counts(italian.chain(foreign))
}

/// Draws given names; Italian names are picked with rank-decaying weights.
struct NamePicker {
    italian: [WeightedIndex<f64>; 2],
}

impl NamePicker {
    fn new() -> Self {
        let w = |list: &[&str]| {
            WeightedIndex::new((0..list.len()).map(|r| 1.0 / (r as f64 + 1.0))).expect("weights")
        };
        Self {
            italian: [w(names::ITALIAN_FEMALE), w(names::ITALIAN_MALE)],
        }
    }

    fn pick(&self, gender: Gender, common: bool, rng: &mut ChaCha8Rng) -> String {
        let g = usize::from(gender == Gender::M);
        let name = if common {
            let list = [names::ITALIAN_FEMALE, names::ITALIAN_MALE][g];
            list[self.italian[g].sample(rng)]
        } else {
            let list = [names::FOREIGN_FEMALE, names::FOREIGN_MALE][g];
            list[rng.random_range(0..list.len())]
        };
        name.to_string()
    }
}

const FOREIGN_ORIGINS: &[&str] = &["AL", "MA", "RO", "CN", "PE", "UA", "EG", "PH", "IN", "EC"];
/// Birth countries of Italian-parent students born abroad.
const EXPAT_BIRTH: &[&str] = &["CH", "DE", "FR", "AR", "BR", "US"];

/// Indicator cells the generator draws from. The first covers kinds 0 and 1;
/// PA settles which.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Stratum,
    AbroadItalianParents,
    Kind2,
    Kind3,
    Kind4,
}

const CELLS: [Cell; 5] = [
    Cell::Stratum,
    Cell::AbroadItalianParents,
    Cell::Kind2,
    Cell::Kind3,
    Cell::Kind4,
];

impl Cell {
    fn bp_cit(self) -> (bool, bool) {
        match self {
            Cell::Stratum => (true, true),
            Cell::AbroadItalianParents | Cell::Kind3 => (false, true),
            Cell::Kind2 => (true, false),
            Cell::Kind4 => (false, false),
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Intercept `b0` with `mean(logistic(b0 + lin)) = target`, by bisection.
fn solve_intercept(lin: &[f64], target: f64) -> f64 {
    if lin.is_empty() {
        return 0.0;
    }
    let mean = |b0: f64| lin.iter().map(|l| logistic(b0 + l)).sum::<f64>() / lin.len() as f64;
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Predictor draws shared by the register generator and the PA-model sampler.
struct PredictorSampler<'a> {
    m: &'a Marginals,
    employment: WeightedIndex<f64>,
    course: WeightedIndex<f64>,
    years_rate: Gamma<f64>,
    ects: Normal<f64>,
}

impl<'a> PredictorSampler<'a> {
    fn new(m: &'a Marginals) -> Self {
        Self {
            m,
            employment: WeightedIndex::new(m.employment).expect("validated shares"),
            course: WeightedIndex::new(m.course_level).expect("validated shares"),
            years_rate: Gamma::new(m.years_gamma_shape, m.years_gamma_scale).expect("validated gamma"),
            ects: Normal::new(m.ects_mean, m.ects_sd).expect("validated normal"),
        }
    }

    fn gender(&self, rng: &mut ChaCha8Rng) -> Gender {
        if rng.random::<f64>() < self.m.male_share {
            Gender::M
        } else {
            Gender::F
        }
    }

    fn employment(&self, rng: &mut ChaCha8Rng) -> Employment {
        Employment::ALL[self.employment.sample(rng)]
    }

    fn course_level(&self, rng: &mut ChaCha8Rng) -> CourseLevel {
        CourseLevel::ALL[self.course.sample(rng)]
    }

    fn years(&self, rng: &mut ChaCha8Rng) -> u32 {
        let rate = self.years_rate.sample(rng);
        let extra = if rate > 1e-12 {
            Poisson::new(rate).expect("positive rate").sample(rng) as u32
        } else {
            0
        };
        (1 + extra).min(self.m.years_max)
    }

    fn ects(&self, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random::<f64>() < self.m.ects_zero_share {
            return 0;
        }
        self.ects.sample(rng).round().clamp(0.0, f64::from(self.m.ects_max)) as u32
    }
}

/// Top `k` of `pool` by Efraimidis-Spirakis keys `ln(u) / w`; weighted
/// sampling without replacement. Returned in pool order.
fn weighted_sample(pool: &[usize], weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = pool
        .iter()
        .zip(weights)
        .map(|(&i, &w)| ((1.0 - rng.random::<f64>()).ln() / w, i))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = keyed.into_iter().take(k).map(|(_, i)| i).collect();
    chosen.sort_unstable();
    chosen
}

fn infeasible(what: &str, wanted: usize, available: usize) -> SynthError {
    SynthError::InfeasibleConfig(format!(
        "{what}: {wanted} respondents requested, only {available} students available"
    ))
}

/// Generates a bundle. The same config and seed always give the same bundle.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<SyntheticBundle, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = &config.kind_shares;
    let a = config.abroad_italian_parents;
    let cell_weights = [s[0] * (1.0 - a) + s[1], s[0] * a, s[2], s[3], s[4]];
    let cells = WeightedIndex::new(cell_weights).expect("validated shares");
    let dept_index =
        WeightedIndex::new(config.departments.iter().map(|d| d.share)).expect("validated shares");
    let predictors = PredictorSampler::new(&config.marginals);
    let picker = NamePicker::new();
    let n = config.n_register;
    let width = n.to_string().len().max(6);

    let mut admin = Vec::with_capacity(n);
    let mut cell_of = Vec::with_capacity(n);
    let mut common_of = Vec::with_capacity(n);
    let mut dept_of = Vec::with_capacity(n);
    for i in 0..n {
        let cell = CELLS[cells.sample(&mut rng)];
        let gender = predictors.gender(&mut rng);
        let employment = predictors.employment(&mut rng);
        let course_level = predictors.course_level(&mut rng);
        let years_enrolled = predictors.years(&mut rng);
        let ects_earned = predictors.ects(&mut rng);
        let d = dept_index.sample(&mut rng);
        let names = &config.names;
        let common = match cell {
            Cell::Stratum => rng.random::<f64>() >= names.stratum_uncommon,
            Cell::AbroadItalianParents => rng.random::<f64>() < names.abroad_italian_parents_common,
            Cell::Kind2 => rng.random::<f64>() < names.kind2_common,
            Cell::Kind3 => rng.random::<f64>() < names.kind3_common,
            Cell::Kind4 => rng.random::<f64>() < names.kind4_common,
        };
        let given_name = picker.pick(gender, common, &mut rng);
        let origin = FOREIGN_ORIGINS[rng.random_range(0..FOREIGN_ORIGINS.len())];
        let (birth, citizenship) = match cell {
            Cell::Stratum => (CountryCode::ITALY, CountryCode::ITALY),
            Cell::AbroadItalianParents => {
                (EXPAT_BIRTH[rng.random_range(0..EXPAT_BIRTH.len())], CountryCode::ITALY)
            }
            Cell::Kind2 => (CountryCode::ITALY, origin),
            Cell::Kind3 => (origin, CountryCode::ITALY),
            Cell::Kind4 => (origin, origin),
        };
        admin.push(AdminRecord {
            link_key: format!("U{:0width$}", i + 1),
            given_name,
            gender,
            birth_country: CountryCode::new(birth),
            citizenship_country: CountryCode::new(citizenship),
            course_level,
            department: config.departments[d].name.clone(),
            enrollment_year: SNAPSHOT_YEAR - years_enrolled as i32,
            years_enrolled,
            ects_earned,
            employment,
        });
        cell_of.push(cell);
        common_of.push(common);
        dept_of.push(d);
    }

    // PA inside the stratum, after all predictors are fixed.
    let stratum: Vec<usize> = (0..n).filter(|&i| cell_of[i] == Cell::Stratum).collect();
    let lin: Vec<f64> = stratum
        .iter()
        .map(|&i| config.pa_model.linear_predictor(&admin[i], common_of[i]))
        .collect();
    let target = s[1] / cell_weights[0];
    let pa_intercept = solve_intercept(&lin, target);
    let mut pa_of = vec![false; n];
    for (i, cell) in cell_of.iter().enumerate() {
        pa_of[i] = matches!(cell, Cell::AbroadItalianParents);
    }
    for (&i, l) in stratum.iter().zip(&lin) {
        pa_of[i] = rng.random::<f64>() >= logistic(pa_intercept + l);
    }

    let kinds: Vec<BackgroundKind> = (0..n)
        .map(|i| {
            let (bp, cit) = cell_of[i].bp_cit();
            compute_delta_type(bp, cit, pa_of[i])
                .expect("generated triples are admissible")
                .kind()
        })
        .collect();

    let weight = |i: usize| {
        let male = if admin[i].gender == Gender::M { config.survey.male_offset } else { 0.0 };
        (male + config.departments[dept_of[i]].response_offset).exp()
    };
    let draw = |pool: Vec<usize>, k: usize, what: &str, rng: &mut ChaCha8Rng| {
        if pool.len() < k {
            return Err(infeasible(what, k, pool.len()));
        }
        let w: Vec<f64> = pool.iter().map(|&i| weight(i)).collect();
        Ok(weighted_sample(&pool, &w, k, rng))
    };
    let stratum_kind = |k: BackgroundKind| -> Vec<usize> {
        stratum.iter().copied().filter(|&i| kinds[i] == k).collect()
    };
    let kind1 = draw(
        stratum_kind(BackgroundKind::SecondGenItalian),
        config.survey.kind1_respondents,
        "kind-1 respondents",
        &mut rng,
    )?;
    let others_pool: Vec<usize> = (0..n)
        .filter(|&i| matches!(cell_of[i], Cell::Kind2 | Cell::Kind3 | Cell::Kind4))
        .collect();
    let others = draw(
        others_pool,
        config.survey.other_member_respondents,
        "other member respondents",
        &mut rng,
    )?;
    let screened = draw(
        stratum_kind(BackgroundKind::NoBackground),
        config.survey.screened_out,
        "screened-out respondents",
        &mut rng,
    )?;

    let mut responded = vec![false; n];
    let mut survey = Vec::with_capacity(kind1.len() + others.len());
    let mut eligible: Vec<usize> = kind1.iter().chain(&others).copied().collect();
    eligible.sort_unstable();
    for i in eligible {
        responded[i] = true;
        let languages = rng.random_range(1..=4u8);
        survey.push(SurveyRecord {
            link_key: admin[i].link_key.clone(),
            eligible: true,
            pa_observed: pa_of[i],
            extra: [("languages_spoken".to_string(), languages.to_string())].into(),
        });
    }
    let mut is_screened = vec![false; n];
    let screened_out = screened
        .iter()
        .map(|&i| {
            is_screened[i] = true;
            SurveyRecord {
                link_key: admin[i].link_key.clone(),
                eligible: false,
                pa_observed: true,
                extra: Default::default(),
            }
        })
        .collect();

    let truth = (0..n)
        .map(|i| {
            let (bp, cit) = cell_of[i].bp_cit();
            let kind = kinds[i];
            TruthRecord {
                link_key: admin[i].link_key.clone(),
                bp: bp.into(),
                cit: cit.into(),
                pa: pa_of[i].into(),
                delta: u8::from(kind != BackgroundKind::NoBackground),
                kind: kind.code(),
                responded: responded[i].into(),
                screened_out: is_screened[i].into(),
            }
        })
        .collect();

    Ok(SyntheticBundle {
        admin,
        survey,
        screened_out,
        names: name_table(),
        truth,
        pa_intercept,
    })
}

/// Draws `n` students of the BP = CIT = 1 stratum with PA from the configured
/// model at intercept `intercept`. Returns the records, whether each has
/// PA = 0, and the name table that decides the common-name dummy.
pub fn sample_pa_model(
    marginals: &Marginals,
    uncommon_share: f64,
    model: &PaModel,
    intercept: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<AdminRecord>, Vec<bool>, NameFrequencyTable), SynthError> {
    let probe = SynthConfig {
        marginals: marginals.clone(),
        names: NameShares {
            stratum_uncommon: uncommon_share,
            ..NameShares::default()
        },
        pa_model: model.clone(),
        ..SynthConfig::default()
    };
    probe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let predictors = PredictorSampler::new(marginals);
    let picker = NamePicker::new();
    let mut records = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let gender = predictors.gender(&mut rng);
        let employment = predictors.employment(&mut rng);
        let course_level = predictors.course_level(&mut rng);
        let years_enrolled = predictors.years(&mut rng);
        let ects_earned = predictors.ects(&mut rng);
        let common = rng.random::<f64>() >= uncommon_share;
        let rec = AdminRecord {
            link_key: format!("P{:07}", i + 1),
            given_name: picker.pick(gender, common, &mut rng),
            gender,
            birth_country: CountryCode::new(CountryCode::ITALY),
            citizenship_country: CountryCode::new(CountryCode::ITALY),
            course_level,
            department: "sciences".to_string(),
            enrollment_year: SNAPSHOT_YEAR - years_enrolled as i32,
            years_enrolled,
            ects_earned,
            employment,
        };
        let p = logistic(intercept + model.linear_predictor(&rec, common));
        labels.push(rng.random::<f64>() < p);
        records.push(rec);
    }
    Ok((records, labels, name_table()))
}
