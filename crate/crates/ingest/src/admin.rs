use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use super::standardize;
use super::{column_index, AdminRecord, CsvOptions, IngestError, Reject};

/// Canonical register columns, in file order.
pub const ADMIN_FIELDS: [&str; 11] = [
    "link_key",
    "given_name",
    "gender",
    "birth_country",
    "citizenship_country",
    "course_level",
    "department",
    "enrollment_year",
    "years_enrolled",
    "ects_earned",
    "employment",
];

#[derive(Debug, Clone, Default)]
pub struct AdminParse {
    pub records: Vec<AdminRecord>,
    pub rejects: Vec<Reject>,
    pub rows_read: usize,
}

pub fn parse_admin(path: &Path, opts: &CsvOptions) -> Result<AdminParse, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    parse_admin_reader(file, opts)
}

pub fn parse_admin_reader<R: Read>(reader: R, opts: &CsvOptions) -> Result<AdminParse, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter_byte())
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; ADMIN_FIELDS.len()];
    for (slot, field) in idx.iter_mut().zip(ADMIN_FIELDS) {
        *slot = column_index(&headers, opts, field)?;
    }

    let mut out = AdminParse::default();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row?;
        out.rows_read += 1;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        match standardize_row(get) {
            Ok(record) => {
                if !seen.insert(record.link_key.clone()) {
                    return Err(IngestError::DuplicateLinkKey(record.link_key));
                }
                out.records.push(record);
            }
            Err((reason, detail)) => out.rejects.push(Reject {
                line,
                link_key: get(0).to_string(),
                reason: reason.to_string(),
                detail,
            }),
        }
    }

    if out.rows_read > 0 {
        let fraction = out.rejects.len() as f64 / out.rows_read as f64;
        if fraction > opts.max_reject_fraction {
            return Err(IngestError::RejectThresholdExceeded {
                rejected: out.rejects.len(),
                total: out.rows_read,
                max_fraction: opts.max_reject_fraction,
            });
        }
    }
    if !out.rejects.is_empty() {
        warn!("{} register rows rejected", out.rejects.len());
    }
    Ok(out)
}

type RowError = (&'static str, String);

fn standardize_row<'a>(get: impl Fn(usize) -> &'a str) -> Result<AdminRecord, RowError> {
    let link_key = get(0);
    if link_key.is_empty() {
        return Err(("missing_link_key", String::new()));
    }
    let gender =
        standardize::gender(get(2)).ok_or(("bad_gender", get(2).to_string()))?;
    let birth_country =
        standardize::country(get(3)).ok_or(("bad_birth_country", get(3).to_string()))?;
    let citizenship_country =
        standardize::country(get(4)).ok_or(("bad_citizenship_country", get(4).to_string()))?;
    let course_level =
        standardize::course_level(get(5)).ok_or(("bad_course_level", get(5).to_string()))?;
    let department =
        standardize::department(get(6)).ok_or(("bad_department", get(6).to_string()))?;
    let enrollment_year: i32 = get(7)
        .parse()
        .map_err(|_| ("bad_enrollment_year", get(7).to_string()))?;
    let years_enrolled: i64 = get(8)
        .parse()
        .map_err(|_| ("bad_years_enrolled", get(8).to_string()))?;
    if years_enrolled < 1 {
        return Err(("years_enrolled_below_1", get(8).to_string()));
    }
    let ects_earned: i64 = get(9)
        .parse()
        .map_err(|_| ("bad_ects_earned", get(9).to_string()))?;
    if ects_earned < 0 {
        return Err(("negative_ects", get(9).to_string()));
    }
    let employment =
        standardize::employment(get(10)).ok_or(("bad_employment", get(10).to_string()))?;
    Ok(AdminRecord {
        link_key: link_key.to_string(),
        given_name: get(1).to_string(),
        gender,
        birth_country,
        citizenship_country,
        course_level,
        department,
        enrollment_year,
        years_enrolled: years_enrolled as u32,
        ects_earned: ects_earned as u32,
        employment,
    })
}

/// Writes records in the canonical register layout.
pub fn write_admin<W: Write>(writer: W, records: &[AdminRecord]) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ADMIN_FIELDS)?;
    for r in records {
        wtr.write_record([
            r.link_key.as_str(),
            r.given_name.as_str(),
            r.gender.as_str(),
            r.birth_country.as_str(),
            r.citizenship_country.as_str(),
            r.course_level.as_str(),
            r.department.as_str(),
            &r.enrollment_year.to_string(),
            &r.years_enrolled.to_string(),
            &r.ects_earned.to_string(),
            r.employment.as_str(),
        ])?;
    }
    wtr.flush().map_err(|e| IngestError::io("<writer>", e))?;
    Ok(())
}

pub fn write_rejects<W: Write>(writer: W, rejects: &[Reject]) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["line", "link_key", "reason", "detail"])?;
    for r in rejects {
        wtr.write_record([r.line.to_string().as_str(), &r.link_key, &r.reason, &r.detail])?;
    }
    wtr.flush().map_err(|e| IngestError::io("<writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Employment;

    const HEADER: &str = "link_key,given_name,gender,birth_country,citizenship_country,course_level,department,enrollment_year,years_enrolled,ects_earned,employment\n";

    fn parse(body: &str) -> Result<AdminParse, IngestError> {
        let text = format!("{HEADER}{body}");
        parse_admin_reader(text.as_bytes(), &CsvOptions::default())
    }

    #[test]
    fn standardizes_employment_label() {
        let out = parse("k1,Maria,F,Italy,IT,Bachelor,Economics,2021,1,0,Student ( >75% )\n").unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].employment, Employment::Student);
        assert_eq!(out.records[0].birth_country.as_str(), "IT");
        assert!(out.rejects.is_empty());
    }

    #[test]
    fn duplicate_key() {
        let body = "k1,A,F,IT,IT,bachelor,law,2021,1,0,student\nk1,B,M,IT,IT,bachelor,law,2021,1,0,student\n";
        assert!(matches!(parse(body), Err(IngestError::DuplicateLinkKey(k)) if k == "k1"));
    }

    #[test]
    fn rejects_are_routed_not_dropped() {
        let mut body = String::new();
        for i in 0..40 {
            body.push_str(&format!("k{i},A,F,IT,IT,bachelor,law,2021,2,10,student\n"));
        }
        body.push_str("bad,A,F,IT,IT,bachelor,law,2021,0,10,student\n");
        let out = parse(&body).unwrap();
        assert_eq!(out.records.len(), 40);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].reason, "years_enrolled_below_1");
        assert_eq!(out.rejects[0].link_key, "bad");
    }

    #[test]
    fn reject_threshold() {
        let body = "k1,A,F,IT,IT,bachelor,law,2021,1,-3,student\nk2,A,F,IT,IT,bachelor,law,2021,1,3,student\n";
        assert!(matches!(
            parse(body),
            Err(IngestError::RejectThresholdExceeded { rejected: 1, total: 2, .. })
        ));
    }

    #[test]
    fn missing_column() {
        let text = "link_key,given_name\nk1,A\n";
        let err = parse_admin_reader(text.as_bytes(), &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { field, .. } if field == "gender"));
    }

    #[test]
    fn column_map_and_delimiter() {
        let text = "id;nome;gender;birth_country;citizenship_country;course_level;department;enrollment_year;years_enrolled;ects_earned;employment\nk9;Luca;M;IT;IT;master;law;2020;2;60;student\n";
        let mut opts = CsvOptions {
            delimiter: ';',
            ..CsvOptions::default()
        };
        opts.columns.insert("link_key".into(), "id".into());
        opts.columns.insert("given_name".into(), "nome".into());
        let out = parse_admin_reader(text.as_bytes(), &opts).unwrap();
        assert_eq!(out.records[0].link_key, "k9");
        assert_eq!(out.records[0].given_name, "Luca");
    }
}
