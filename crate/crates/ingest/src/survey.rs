use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use super::standardize;
use super::{column_index, CsvOptions, IngestError, SurveyRecord};

const SURVEY_FIELDS: [&str; 3] = ["link_key", "eligible", "pa_observed"];

/// Parses and concatenates survey extracts, e.g. the eligible respondents and
/// the screened-out contacts kept by the survey platform.
pub fn parse_survey<P: AsRef<Path>>(
    paths: &[P],
    opts: &CsvOptions,
) -> Result<Vec<SurveyRecord>, IngestError> {
    let mut all = Vec::new();
    let mut seen = HashSet::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
        for rec in parse_survey_reader(bytes.as_slice(), opts)? {
            if !seen.insert(rec.link_key.clone()) {
                return Err(IngestError::DuplicateLinkKey(rec.link_key));
            }
            all.push(rec);
        }
    }
    Ok(all)
}

pub fn parse_survey_reader<R: Read>(
    mut reader: R,
    opts: &CsvOptions,
) -> Result<Vec<SurveyRecord>, IngestError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| IngestError::io("<survey>", e))?;
    if text.trim().is_empty() {
        warn!("survey extract is empty");
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter_byte())
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; SURVEY_FIELDS.len()];
    for (slot, field) in idx.iter_mut().zip(SURVEY_FIELDS) {
        *slot = column_index(&headers, opts, field)?;
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        let link_key = get(0).to_string();
        if link_key.is_empty() {
            return Err(IngestError::Validation {
                line,
                reason: "missing link_key".into(),
            });
        }
        let eligible = standardize::flag(get(1)).ok_or_else(|| IngestError::Validation {
            line,
            reason: format!("eligible must be 0/1, got `{}`", get(1)),
        })?;
        let pa_observed = standardize::flag(get(2)).ok_or_else(|| IngestError::Validation {
            line,
            reason: format!("pa_observed must be 0/1, got `{}`", get(2)),
        })?;
        if !eligible && !pa_observed {
            return Err(IngestError::Validation {
                line,
                reason: format!(
                    "screened-out row `{link_key}` has pa_observed=0; screening out implies both parents Italian"
                ),
            });
        }
        if !seen.insert(link_key.clone()) {
            return Err(IngestError::DuplicateLinkKey(link_key));
        }
        let extra: BTreeMap<String, String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !idx.contains(i))
            .map(|(i, h)| (h.to_string(), row.get(i).unwrap_or("").to_string()))
            .collect();
        out.push(SurveyRecord {
            link_key,
            eligible,
            pa_observed,
            extra,
        });
    }
    Ok(out)
}

/// Writes survey rows; extra columns are taken from the first record.
pub fn write_survey<W: Write>(writer: W, records: &[SurveyRecord]) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let extra_cols: Vec<String> = records
        .first()
        .map(|r| r.extra.keys().cloned().collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = SURVEY_FIELDS.to_vec();
    header.extend(extra_cols.iter().map(String::as_str));
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.link_key.clone(),
            u8::from(r.eligible).to_string(),
            u8::from(r.pa_observed).to_string(),
        ];
        for col in &extra_cols {
            row.push(r.extra.get(col).cloned().unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| IngestError::io("<writer>", e))?;
    Ok(())
}
