//! The full method in memory: link the survey to the register, train and
//! evaluate the PA classifiers, impute PA over the hidden stratum, expand the
//! register and compare respondents with the population.
//!
//! Each stage is a separate function so callers can stop after any of them.

use std::collections::BTreeMap;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use mbid_eval::{kfold_cv, roc, split_train_validate, evaluate, CvResult, EvalError, MetricsReport, RocCurve};
use mbid_expand::{
    bias_report, expand_dataset, impute_pa, tabulate_population, BiasReport, BiasVariable,
    DistributionTable, ExpandError, ExpandedRecord, Imputation, DEFAULT_ALERT_PP,
};
use mbid_features::{
    assemble_training_set, build_schema, correlation_matrix, training_records, FeatureConfig,
    FeatureError, FeatureSchema, LabeledDataset,
};
use mbid_ingest::{link, AdminRecord, LinkedDataset, NameFrequencyTable, SurveyRecord};
use mbid_models::{
    permutation_importance, score_dataset, FittedModel, ForestConfig, ImportanceReport,
    LogisticConfig, ModelError, Trainer, DEFAULT_THRESHOLD,
};
use mbid_synth::SynthConfig;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error("model `{0}` was not trained in this run")]
    UnknownModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelection {
    Logistic,
    Forest,
    Both,
}

impl ModelSelection {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ModelSelection::Logistic => &["logistic"],
            ModelSelection::Forest => &["forest"],
            ModelSelection::Both => &["logistic", "forest"],
        }
    }
}

/// Settings of a run. Serialized as the TOML config file of the command line
/// tool; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub models: ModelSelection,
    /// Model used for imputation; must be among `models`.
    pub impute_with: String,
    pub threshold: f64,
    /// Share of the training set used for fitting; the rest validates.
    pub train_ratio: f64,
    pub cv_folds: usize,
    pub importance_repeats: usize,
    pub alert_pp: f64,
    pub bias_variables: Vec<BiasVariable>,
    pub features: FeatureConfig,
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            models: ModelSelection::Both,
            impute_with: "logistic".to_string(),
            threshold: DEFAULT_THRESHOLD,
            train_ratio: 0.75,
            cv_folds: 10,
            importance_repeats: 10,
            alert_pp: DEFAULT_ALERT_PP,
            bias_variables: BiasVariable::DEFAULT.to_vec(),
            features: FeatureConfig::default(),
            logistic: LogisticConfig::default(),
            forest: ForestConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn trainer(&self, name: &str) -> Option<Trainer> {
        match name {
            "logistic" => Some(Trainer::Logistic(self.logistic)),
            "forest" => Some(Trainer::Forest(self.forest)),
            _ => None,
        }
    }

    pub fn trainers(&self) -> Vec<Trainer> {
        self.models.names().iter().filter_map(|n| self.trainer(n)).collect()
    }
}

/// Independent seeds for the random stages of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub model: u64,
    pub cv: u64,
    pub importance: u64,
}

impl StageSeeds {
    pub fn from_run_seed(seed: u64) -> Self {
        let mix = |salt: u64| seed ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        Self {
            split: seed,
            model: mix(1),
            cv: mix(2),
            importance: mix(3),
        }
    }
}

/// Linked data and the labeled training set built from it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub linked: LinkedDataset,
    pub schema: FeatureSchema,
    pub data: LabeledDataset<f64>,
    pub correlations: Vec<Vec<Option<f64>>>,
}

pub fn prepare(
    admin: &[AdminRecord],
    survey: &[SurveyRecord],
    names: &NameFrequencyTable,
    features: &FeatureConfig,
) -> Result<Prepared, PipelineError> {
    let linked = link(admin, survey);
    let records: Vec<&AdminRecord> = training_records(&linked).into_iter().map(|(a, _)| a).collect();
    let schema = build_schema(&records, names, features)?;
    let data = assemble_training_set(&linked, &schema, names)?;
    let correlations = correlation_matrix(&data);
    Ok(Prepared {
        linked,
        schema,
        data,
        correlations,
    })
}

/// One classifier fitted on the training split and assessed on the rest.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub name: String,
    pub model: FittedModel<f64>,
    pub validation: MetricsReport<f64>,
    pub roc: RocCurve,
    pub cv: CvResult,
    pub importance: ImportanceReport,
    /// Validation rows: id, label, score.
    pub validation_scores: Vec<(String, bool, f64)>,
}

pub fn train_and_evaluate(
    data: &LabeledDataset<f64>,
    trainer: &Trainer,
    config: &PipelineConfig,
) -> Result<ModelRun, PipelineError> {
    let seeds = StageSeeds::from_run_seed(config.seed);
    let (train, validate) = split_train_validate(data, config.train_ratio, seeds.split)?;
    let trainer = trainer.with_seed(seeds.model);
    let model = trainer.fit(&train)?;
    let scores = score_dataset(&model, &validate)?;
    let validation = evaluate(&scores, validate.labels(), config.threshold)?;
    let roc = roc(&scores, validate.labels())?;
    let cv = kfold_cv(data, config.cv_folds, seeds.cv, &trainer, config.threshold)?;
    let importance = permutation_importance(
        &model,
        &validate,
        config.threshold,
        seeds.importance,
        config.importance_repeats,
    );
    info!(
        "{}: validation accuracy {:?}, AUC {:.4}, CV mean accuracy {:?}",
        trainer.name(),
        validation.accuracy,
        roc.auc,
        cv.mean("accuracy")
    );
    let validation_scores = validate
        .ids()
        .iter()
        .zip(validate.labels())
        .zip(&scores)
        .map(|((id, &l), &s)| (id.clone(), l, s))
        .collect();
    Ok(ModelRun {
        name: trainer.name().to_string(),
        model,
        validation,
        roc,
        cv,
        importance,
        validation_scores,
    })
}

/// The register with every record's membership settled.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub imputations: BTreeMap<String, Imputation>,
    pub expanded: Vec<ExpandedRecord>,
    pub distribution: DistributionTable,
}

pub fn expand_register(
    model: &FittedModel<f64>,
    schema: &FeatureSchema,
    names: &NameFrequencyTable,
    admin: &[AdminRecord],
    linked: &LinkedDataset,
    threshold: f64,
) -> Result<Expansion, PipelineError> {
    let imputations = impute_pa(model, schema, names, admin, linked, threshold)?;
    let expanded = expand_dataset(admin, linked, &imputations)?;
    let distribution = tabulate_population(&expanded);
    info!(
        "expanded {} records; {} imputed; estimated members {}",
        expanded.len(),
        imputations.len(),
        distribution.n_members
    );
    Ok(Expansion {
        imputations,
        expanded,
        distribution,
    })
}

/// Members of the expanded register against linked eligible respondents.
pub fn sample_bias(
    expanded: &[ExpandedRecord],
    linked: &LinkedDataset,
    variables: &[BiasVariable],
    alert_pp: f64,
) -> Result<BiasReport, PipelineError> {
    let population: Vec<&AdminRecord> = expanded.iter().filter(|e| e.delta).map(|e| &e.record).collect();
    let sample: Vec<&AdminRecord> = linked
        .matched
        .iter()
        .filter(|(_, s)| s.eligible)
        .map(|(a, _)| a)
        .collect();
    Ok(bias_report(&population, &sample, variables, alert_pp)?)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub prepared: Prepared,
    pub runs: Vec<ModelRun>,
    pub imputed_with: String,
    pub expansion: Expansion,
    pub bias: BiasReport,
}

impl PipelineOutput {
    pub fn run(&self, name: &str) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.name == name)
    }
}

pub fn run_pipeline(
    admin: &[AdminRecord],
    survey: &[SurveyRecord],
    names: &NameFrequencyTable,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let prepared = prepare(admin, survey, names, &config.features)?;
    let runs = config
        .trainers()
        .iter()
        .map(|t| train_and_evaluate(&prepared.data, t, config))
        .collect::<Result<Vec<_>, _>>()?;
    let chosen = runs
        .iter()
        .find(|r| r.name == config.impute_with)
        .ok_or_else(|| PipelineError::UnknownModel(config.impute_with.clone()))?;
    let expansion = expand_register(
        &chosen.model,
        &prepared.schema,
        names,
        admin,
        &prepared.linked,
        config.threshold,
    )?;
    let bias = sample_bias(
        &expansion.expanded,
        &prepared.linked,
        &config.bias_variables,
        config.alert_pp,
    )?;
    Ok(PipelineOutput {
        imputed_with: chosen.name.clone(),
        prepared,
        runs,
        expansion,
        bias,
    })
}
