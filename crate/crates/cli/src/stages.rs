//! One function per subcommand. Each reads its inputs from files, writes its
//! artifacts into a fresh output directory and finishes with the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use mbid_eval::{evaluate, roc, split_train_validate};
use mbid_features::{assemble_training_set, FeatureSchema, LabeledDataset};
use mbid_ingest::{
    link, parse_admin, parse_name_table, parse_survey, write_admin, write_name_table,
    write_rejects, write_survey, AdminParse, AdminRecord, CsvOptions, NameFrequencyTable,
    SurveyRecord,
};
use mbid_models::{score_dataset, FittedModel, SavedModel};
use mbid_pipeline::{
    expand_register, prepare, train_and_evaluate, PipelineConfig, StageSeeds,
};
use mbid_synth::{
    generate, write_truth, ADMIN_FILE, NAMES_FILE, SCREENED_OUT_FILE, SURVEY_FILE, TRUTH_FILE,
};

use crate::error::{Class, CliError};
use crate::manifest::{FileDigest, OutputDir, RunManifest, MANIFEST_FILE};
use crate::tables;

pub const SCHEMA_FILE: &str = "schema.json";
pub const EXPANDED_FILE: &str = "expanded.csv";

/// Thresholds at which the estimated member count is reported.
const SWEEP_THRESHOLDS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Which training rows `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Rows {
    /// The held-out part of the stratified split, as in `train`.
    Validation,
    All,
}

fn config_json(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn to_vec<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), mbid_ingest::IngestError>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Refuses to write into a directory the stage reads from.
fn check_disjoint(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    let canon = |p: &Path| fs::canonicalize(p).ok();
    let out_c = canon(out);
    for input in inputs {
        let dir = if input.is_dir() { Some(input.to_path_buf()) } else { input.parent().map(Path::to_path_buf) };
        if let (Some(o), Some(i)) = (&out_c, dir.as_deref().and_then(canon)) {
            if *o == i {
                return Err(CliError::usage(format!(
                    "output directory {} is also an input directory",
                    out.display()
                )));
            }
        }
    }
    Ok(())
}

/// Register, survey extracts and name table from a data directory.
pub struct Inputs {
    pub admin: AdminParse,
    pub survey: Vec<SurveyRecord>,
    pub names: NameFrequencyTable,
    pub digests: Vec<FileDigest>,
}

pub fn load_inputs(data_dir: &Path) -> Result<Inputs, CliError> {
    if !data_dir.is_dir() {
        return Err(CliError::usage(format!("data directory {} does not exist", data_dir.display())));
    }
    let opts = CsvOptions::default();
    let path = |f: &str| data_dir.join(f);
    let admin = parse_admin(&path(ADMIN_FILE), &opts)?;
    let survey = parse_survey(&[path(SURVEY_FILE), path(SCREENED_OUT_FILE)], &opts)?;
    let names = parse_name_table(read_file(&path(NAMES_FILE))?.as_slice())?;
    let digests = [ADMIN_FILE, SURVEY_FILE, SCREENED_OUT_FILE, NAMES_FILE]
        .iter()
        .map(|f| FileDigest::of_file(&path(f)))
        .collect::<Result<_, _>>()?;
    info!(
        "loaded {} register rows ({} rejected), {} survey rows, {} names",
        admin.rows_read,
        admin.rejects.len(),
        survey.len(),
        names.len()
    );
    Ok(Inputs {
        admin,
        survey,
        names,
        digests,
    })
}

pub fn synth(cfg: &PipelineConfig, out: &Path) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "synth")?;
    let bundle = generate(&cfg.synth, cfg.seed)?;
    dir.write(ADMIN_FILE, &to_vec(|b| write_admin(b, &bundle.admin))?)?;
    dir.write(SURVEY_FILE, &to_vec(|b| write_survey(b, &bundle.survey))?)?;
    dir.write(SCREENED_OUT_FILE, &to_vec(|b| write_survey(b, &bundle.screened_out))?)?;
    dir.write(NAMES_FILE, &to_vec(|b| write_name_table(b, &bundle.names))?)?;
    let mut truth = Vec::new();
    write_truth(&mut truth, &bundle.truth)?;
    dir.write(TRUTH_FILE, &truth)?;
    dir.finish(Some(cfg.seed), serde_json::to_value(&cfg.synth).expect("serializes"), vec![])
}

pub fn ingest(cfg: &PipelineConfig, data_dir: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "ingest")?;
    check_disjoint(out, &[data_dir])?;
    let inputs = load_inputs(data_dir)?;
    let prepared = prepare(&inputs.admin.records, &inputs.survey, &inputs.names, &cfg.features)?;
    dir.write("admin_clean.csv", &to_vec(|b| write_admin(b, &inputs.admin.records))?)?;
    dir.write("rejects.csv", &to_vec(|b| write_rejects(b, &inputs.admin.rejects))?)?;

    let linked = &prepared.linked;
    let rows: Vec<Vec<String>> = linked
        .matched
        .iter()
        .map(|(a, s)| {
            vec![
                a.link_key.clone(),
                u8::from(s.eligible).to_string(),
                u8::from(s.pa_observed).to_string(),
                u8::from(a.born_in_italy()).to_string(),
                u8::from(a.italian_citizen()).to_string(),
            ]
        })
        .collect();
    dir.write(
        "linked.csv",
        &tables::csv_bytes(&["link_key", "eligible", "pa_observed", "bp", "cit"], &rows)?,
    )?;
    dir.write("training_set.csv", &training_csv(&prepared.data)?)?;
    dir.write_str(SCHEMA_FILE, &prepared.schema.to_json())?;
    dir.write(
        "correlations.csv",
        &tables::correlations_csv(prepared.data.feature_names(), &prepared.correlations)?,
    )?;
    let summary = serde_json::json!({
        "register_rows_read": inputs.admin.rows_read,
        "register_records": inputs.admin.records.len(),
        "register_rejects": inputs.admin.rejects.len(),
        "survey_records": inputs.survey.len(),
        "linked": linked.matched.len(),
        "unmatched_register": linked.unmatched_admin.len(),
        "unmatched_survey": linked.unmatched_survey.len(),
        "training_rows": prepared.data.n_rows(),
        "training_positive": prepared.data.n_positive(),
        "schema_digest": prepared.schema.digest(),
    });
    dir.write_str("summary.json", &serde_json::to_string_pretty(&summary).expect("serializes"))?;
    dir.finish(Some(cfg.seed), config_json(cfg), inputs.digests)
}

fn training_csv(data: &LabeledDataset<f64>) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["link_key", "label"];
    header.extend(data.feature_names().iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..data.n_rows())
        .map(|i| {
            let mut r = vec![data.ids()[i].clone(), u8::from(data.labels()[i]).to_string()];
            r.extend(data.row(i).iter().map(|v| v.to_string()));
            r
        })
        .collect();
    tables::csv_bytes(&header, &rows)
}

fn model_file(name: &str) -> String {
    format!("model_{name}.json")
}

pub fn train(cfg: &PipelineConfig, data_dir: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "train")?;
    check_disjoint(out, &[data_dir])?;
    let inputs = load_inputs(data_dir)?;
    let prepared = prepare(&inputs.admin.records, &inputs.survey, &inputs.names, &cfg.features)?;
    dir.write_str(SCHEMA_FILE, &prepared.schema.to_json())?;

    let mut metrics = Vec::new();
    let mut cv_summary = Vec::new();
    for trainer in cfg.trainers() {
        let run = train_and_evaluate(&prepared.data, &trainer, cfg)?;
        let name = run.name.as_str();
        let saved = SavedModel::new(prepared.schema.clone(), run.model.clone())?;
        dir.write_str(&model_file(name), &saved.to_json())?;
        metrics.push(tables::metrics_row(name, "validation", &run.validation, &run.roc));
        cv_summary.extend(tables::cv_summary_rows(name, &run.cv));
        dir.write(&format!("roc_{name}.csv"), &tables::roc_csv(&run.roc)?)?;
        dir.write(&format!("cv_{name}.csv"), &tables::cv_folds_csv(&run.cv)?)?;
        dir.write(&format!("importance_{name}.csv"), &tables::importance_csv(&run.importance)?)?;
        let scores: Vec<Vec<String>> = run
            .validation_scores
            .iter()
            .map(|(id, l, s)| vec![id.clone(), u8::from(*l).to_string(), s.to_string()])
            .collect();
        dir.write(
            &format!("validation_scores_{name}.csv"),
            &tables::csv_bytes(&["link_key", "label", "score"], &scores)?,
        )?;
        if let FittedModel::Logistic(m) = &run.model {
            let mut rows = vec![vec!["intercept".to_string(), m.intercept.to_string()]];
            rows.extend(
                prepared
                    .data
                    .feature_names()
                    .iter()
                    .zip(&m.weights)
                    .map(|(n, w)| vec![n.clone(), w.to_string()]),
            );
            dir.write("coefficients_logistic.csv", &tables::csv_bytes(&["term", "estimate"], &rows)?)?;
        }
    }
    dir.write("metrics.csv", &tables::csv_bytes(&tables::METRICS_HEADER, &metrics)?)?;
    dir.write("cv_summary.csv", &tables::csv_bytes(&tables::CV_SUMMARY_HEADER, &cv_summary)?)?;
    dir.finish(Some(cfg.seed), config_json(cfg), inputs.digests)
}

/// Loads a saved model and checks it against its schema sidecar, by default
/// `schema.json` next to the model file.
pub fn load_model(
    model_path: &Path,
    schema_path: Option<&Path>,
) -> Result<(SavedModel<f64>, Vec<FileDigest>), CliError> {
    let text = String::from_utf8(read_file(model_path)?)
        .map_err(|e| CliError::new(Class::Data, "ModelFormat", e))?;
    let saved = SavedModel::<f64>::from_json(&text)?;
    let sidecar: PathBuf = schema_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| model_path.with_file_name(SCHEMA_FILE));
    let schema_text = String::from_utf8(read_file(&sidecar)?)
        .map_err(|e| CliError::new(Class::Data, "SchemaFormat", e))?;
    let schema = FeatureSchema::from_json(&schema_text)
        .map_err(|e| CliError::new(Class::Data, "SchemaFormat", format!("{}: {e}", sidecar.display())))?;
    schema.check_supported()?;
    saved.verify_schema(&schema.digest())?;
    let digests = vec![FileDigest::of_file(model_path)?, FileDigest::of_file(&sidecar)?];
    Ok((saved, digests))
}

pub fn evaluate_model(
    cfg: &PipelineConfig,
    data_dir: &Path,
    model_path: &Path,
    schema_path: Option<&Path>,
    rows: Rows,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "evaluate")?;
    check_disjoint(out, &[data_dir, model_path])?;
    let (saved, mut digests) = load_model(model_path, schema_path)?;
    let inputs = load_inputs(data_dir)?;
    digests.extend(inputs.digests);
    let linked = link(&inputs.admin.records, &inputs.survey);
    let data = assemble_training_set::<f64>(&linked, &saved.schema, &inputs.names)?;
    let data = match rows {
        Rows::All => data,
        Rows::Validation => {
            let seeds = StageSeeds::from_run_seed(cfg.seed);
            split_train_validate(&data, cfg.train_ratio, seeds.split)?.1
        }
    };
    let scores = score_dataset(&saved.model, &data)?;
    let report = evaluate(&scores, data.labels(), cfg.threshold)?;
    let curve = roc(&scores, data.labels())?;
    let label = match rows {
        Rows::All => "all",
        Rows::Validation => "validation",
    };
    let row = tables::metrics_row(saved.model.kind(), label, &report, &curve);
    dir.write("metrics.csv", &tables::csv_bytes(&tables::METRICS_HEADER, &[row])?)?;
    dir.write("roc.csv", &tables::roc_csv(&curve)?)?;
    let score_rows: Vec<Vec<String>> = (0..data.n_rows())
        .map(|i| vec![data.ids()[i].clone(), u8::from(data.labels()[i]).to_string(), scores[i].to_string()])
        .collect();
    dir.write("scores.csv", &tables::csv_bytes(&["link_key", "label", "score"], &score_rows)?)?;
    dir.finish(Some(cfg.seed), config_json(cfg), digests)
}

pub fn impute(
    cfg: &PipelineConfig,
    data_dir: &Path,
    model_path: &Path,
    schema_path: Option<&Path>,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "impute")?;
    check_disjoint(out, &[data_dir, model_path])?;
    let (saved, mut digests) = load_model(model_path, schema_path)?;
    let inputs = load_inputs(data_dir)?;
    digests.extend(inputs.digests);
    let admin = &inputs.admin.records;
    let linked = link(admin, &inputs.survey);
    let expansion = expand_register(&saved.model, &saved.schema, &inputs.names, admin, &linked, cfg.threshold)?;
    dir.write(EXPANDED_FILE, &tables::expanded_csv(&expansion.expanded)?)?;
    dir.write("distribution.csv", &tables::distribution_csv(&expansion.distribution)?)?;
    dir.write_str("distribution.md", &expansion.distribution.to_markdown())?;

    let settled = expansion
        .expanded
        .iter()
        .filter(|e| e.delta && e.predicted_score.is_none())
        .count();
    let sweep: Vec<Vec<String>> = SWEEP_THRESHOLDS
        .iter()
        .map(|&t| {
            let predicted = expansion.imputations.values().filter(|i| i.score > t).count();
            vec![t.to_string(), (settled + predicted).to_string()]
        })
        .collect();
    dir.write("threshold_sweep.csv", &tables::csv_bytes(&["threshold", "n_members"], &sweep)?)?;
    dir.finish(Some(cfg.seed), config_json(cfg), digests)
}

/// `link_key -> delta` from an expanded register file.
fn read_expanded(path: &Path) -> Result<BTreeMap<String, bool>, CliError> {
    let bytes = read_file(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::new(Class::Data, "MissingColumn", format!("{}: no `{name}` column", path.display()))
        })
    };
    let (key, delta) = (col("link_key")?, col("delta")?);
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let d = match &rec[delta] {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::new(
                    Class::Data,
                    "Validation",
                    format!("{}: delta `{other}` is not 0 or 1", path.display()),
                ))
            }
        };
        out.insert(rec[key].to_string(), d);
    }
    Ok(out)
}

pub fn report(
    cfg: &PipelineConfig,
    data_dir: &Path,
    expanded_path: &Path,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "report")?;
    check_disjoint(out, &[data_dir, expanded_path])?;
    let inputs = load_inputs(data_dir)?;
    let mut digests = inputs.digests;
    digests.push(FileDigest::of_file(expanded_path)?);
    let delta = read_expanded(expanded_path)?;
    let admin = &inputs.admin.records;
    let mut population: Vec<&AdminRecord> = Vec::new();
    for r in admin {
        match delta.get(&r.link_key) {
            Some(true) => population.push(r),
            Some(false) => {}
            None => {
                return Err(CliError::new(
                    Class::Data,
                    "CoverageGap",
                    format!("register record `{}` is missing from {}", r.link_key, expanded_path.display()),
                ))
            }
        }
    }
    let linked = link(admin, &inputs.survey);
    let sample: Vec<&AdminRecord> = linked.matched.iter().filter(|(_, s)| s.eligible).map(|(a, _)| a).collect();
    let bias = mbid_expand::bias_report(&population, &sample, &cfg.bias_variables, cfg.alert_pp)?;
    dir.write("bias.csv", &tables::bias_csv(&bias)?)?;
    dir.write_str("bias.md", &tables::bias_markdown(&bias))?;
    dir.finish(Some(cfg.seed), config_json(cfg), digests)
}

/// All stages in order, each in its own subdirectory of `out`. Without a data
/// directory the register comes from the generator.
pub fn pipeline(cfg: &PipelineConfig, data_dir: Option<&Path>, out: &Path) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(out, "pipeline")?;
    if let Some(d) = data_dir {
        check_disjoint(out, &[d])?;
    }
    let sub = |name: &str| out.join(name);
    let mut stages = Vec::new();
    let data: PathBuf = match data_dir {
        Some(d) => d.to_path_buf(),
        None => {
            synth(cfg, &sub("synth"))?;
            stages.push("synth");
            sub("synth")
        }
    };
    ingest(cfg, &data, &sub("ingest"))?;
    train(cfg, &data, &sub("train"))?;
    let model = sub("train").join(model_file(&cfg.impute_with));
    evaluate_model(cfg, &data, &model, None, Rows::Validation, &sub("evaluate"))?;
    impute(cfg, &data, &model, None, &sub("impute"))?;
    report(cfg, &data, &sub("impute").join(EXPANDED_FILE), &sub("report"))?;
    stages.extend(["ingest", "train", "evaluate", "impute", "report"]);
    for s in stages {
        dir.record(&format!("{s}/{MANIFEST_FILE}"))?;
    }
    let inputs = match data_dir {
        Some(d) => load_inputs(d)?.digests,
        None => vec![],
    };
    dir.finish(Some(cfg.seed), config_json(cfg), inputs)
}
