//! CSV and markdown renderings of results. Undefined values are empty cells.

use mbid_eval::{CvResult, MetricsReport, RocCurve, METRIC_NAMES};
use mbid_core::domain::BackgroundKind;
use mbid_expand::{BiasReport, DistributionTable, ExpandedRecord};
use mbid_ingest::ADMIN_FIELDS;
use mbid_models::ImportanceReport;

use crate::error::CliError;

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn csv_bytes<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref))?;
    }
    w.into_inner().map_err(|e| CliError::new(crate::error::Class::Internal, "Csv", e))
}

pub const METRICS_HEADER: [&str; 12] = [
    "model",
    "rows",
    "accuracy",
    "precision",
    "true_positive_rate",
    "f1",
    "kappa",
    "auc",
    "tp",
    "fp",
    "fn",
    "tn",
];

pub fn metrics_row(model: &str, rows: &str, m: &MetricsReport<f64>, roc: &RocCurve) -> Vec<String> {
    let c = m.confusion;
    let mut row = vec![model.to_string(), rows.to_string()];
    row.extend(m.values().iter().map(|(_, v)| opt(*v)));
    row.push(roc.auc.to_string());
    row.extend([c.tp, c.fp, c.fn_, c.tn].map(|v| v.to_string()));
    row
}

pub fn roc_csv(roc: &RocCurve) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = roc
        .points
        .iter()
        .map(|p| vec![p.fpr.to_string(), p.tpr.to_string(), p.cutoff.to_string()])
        .collect();
    csv_bytes(&["fpr", "tpr", "cutoff"], &rows)
}

pub fn cv_folds_csv(cv: &CvResult) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["fold", "n_train", "n_test", "model_seed"];
    header.extend(METRIC_NAMES);
    let rows: Vec<Vec<String>> = cv
        .folds
        .iter()
        .map(|f| {
            let mut r = vec![
                f.fold.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.model_seed.to_string(),
            ];
            r.extend(f.metrics.values().iter().map(|(_, v)| opt(*v)));
            r
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub const CV_SUMMARY_HEADER: [&str; 7] = ["model", "k", "metric", "mean", "sd", "n_defined", "n_undefined"];

pub fn cv_summary_rows(model: &str, cv: &CvResult) -> Vec<Vec<String>> {
    cv.summary
        .iter()
        .map(|s| {
            vec![
                model.to_string(),
                cv.k.to_string(),
                s.metric.clone(),
                opt(s.mean),
                opt(s.sd),
                s.n_defined.to_string(),
                s.n_undefined.to_string(),
            ]
        })
        .collect()
}

pub fn importance_csv(report: &ImportanceReport) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = report
        .ranking
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let e = &report.entries[i];
            let cols: Vec<String> = e.columns.iter().map(|c| c.to_string()).collect();
            vec![
                (rank + 1).to_string(),
                e.feature.clone(),
                cols.join(" "),
                e.mda.to_string(),
                e.sd.to_string(),
            ]
        })
        .collect();
    csv_bytes(&["rank", "feature", "columns", "mda", "sd"], &rows)
}

pub fn distribution_csv(t: &DistributionTable) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            vec![
                u8::from(r.delta).to_string(),
                r.kind.code().to_string(),
                r.kind.label().to_string(),
                r.count.to_string(),
                r.pct_of_all.to_string(),
                opt(r.pct_of_members),
            ]
        })
        .collect();
    csv_bytes(&["delta", "kind", "label", "count", "pct_of_all", "pct_of_members"], &rows)
}

/// Columns appended to the register columns in expanded.csv.
const EXPANDED_EXTRA: [&str; 7] = ["bp", "cit", "pa", "delta", "kind", "provenance", "predicted_score"];

pub fn expanded_csv(records: &[ExpandedRecord]) -> Result<Vec<u8>, CliError> {
    let header: Vec<&str> = ADMIN_FIELDS.iter().chain(&EXPANDED_EXTRA).copied().collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|e| {
            let r = &e.record;
            // Every kind but 0 has PA = 0, so the resolved PA follows from the kind.
            let pa = e.kind == BackgroundKind::NoBackground;
            vec![
                r.link_key.clone(),
                r.given_name.clone(),
                r.gender.as_str().to_string(),
                r.birth_country.as_str().to_string(),
                r.citizenship_country.as_str().to_string(),
                r.course_level.as_str().to_string(),
                r.department.clone(),
                r.enrollment_year.to_string(),
                r.years_enrolled.to_string(),
                r.ects_earned.to_string(),
                r.employment.as_str().to_string(),
                u8::from(r.born_in_italy()).to_string(),
                u8::from(r.italian_citizen()).to_string(),
                u8::from(pa).to_string(),
                u8::from(e.delta).to_string(),
                e.kind.code().to_string(),
                e.provenance.as_str().to_string(),
                opt(e.predicted_score),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn bias_csv(report: &BiasReport) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = report
        .variables
        .iter()
        .flat_map(|v| {
            v.levels.iter().map(|l| {
                vec![
                    v.variable.clone(),
                    l.level.clone(),
                    l.population_share.to_string(),
                    l.sample_share.to_string(),
                    l.gap_pp.to_string(),
                    u8::from(l.flagged).to_string(),
                ]
            })
        })
        .collect();
    csv_bytes(
        &["variable", "level", "population_pct", "sample_pct", "gap_pp", "flagged"],
        &rows,
    )
}

pub fn bias_markdown(report: &BiasReport) -> String {
    let mut s = format!(
        "# Survey members against register members\n\nRegister members: {}. Linked eligible respondents: {}. Alert level: {} pp.\n",
        report.n_population, report.n_sample, report.alert_pp
    );
    for v in &report.variables {
        s.push_str(&format!(
            "\n## {}{}\n\n| level | register % | sample % | gap (pp) |\n|---|---:|---:|---:|\n",
            v.variable,
            if v.flagged() { " (flagged)" } else { "" }
        ));
        for l in &v.levels {
            s.push_str(&format!(
                "| {} | {:.2} | {:.2} | {:+.2}{} |\n",
                l.level,
                l.population_share,
                l.sample_share,
                l.gap_pp,
                if l.flagged { " !" } else { "" }
            ));
        }
    }
    s
}

/// Pairwise correlations with feature names on both axes.
pub fn correlations_csv(names: &[String], m: &[Vec<Option<f64>>]) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["feature"];
    header.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(m)
        .map(|(n, row)| {
            let mut r = vec![n.clone()];
            r.extend(row.iter().map(|v| opt(*v)));
            r
        })
        .collect();
    csv_bytes(&header, &rows)
}
