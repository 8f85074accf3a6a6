//! Coding rules for raw register values.
//!
//! Each function folds the spellings seen in administrative exports onto the
//! canonical code, or returns `None` when the value cannot be placed.

use super::{CountryCode, CourseLevel, Employment, Gender};

fn fold(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn gender(raw: &str) -> Option<Gender> {
    match fold(raw).as_str() {
        "f" | "female" | "femmina" | "donna" | "w" => Some(Gender::F),
        "m" | "male" | "maschio" | "uomo" => Some(Gender::M),
        _ => None,
    }
}

/// Employment status. Labels carry the study-time band in parentheses, e.g.
/// `Student ( >75% )`; only the leading words decide the level.
pub fn employment(raw: &str) -> Option<Employment> {
    let folded = fold(raw);
    if let Some(e) = Employment::from_code(&folded) {
        return Some(e);
    }
    let head = folded
        .split('(')
        .next()
        .unwrap_or("")
        .trim()
        .replace(['-', '_'], " ");
    match head.as_str() {
        "" | "na" | "n/a" | "n.a." | "not available" | "unknown" => Some(Employment::NotAvailable),
        "worker student" | "worker" => Some(Employment::WorkerStudent),
        "student worker" => Some(Employment::StudentWorker),
        "student" | "full time student" => Some(Employment::Student),
        _ => None,
    }
}

pub fn course_level(raw: &str) -> Option<CourseLevel> {
    let folded = fold(raw).replace(['-', '_'], " ");
    match folded.as_str() {
        "bachelor" | "laurea triennale" | "triennale" | "l" | "ba" | "bsc" => {
            Some(CourseLevel::Bachelor)
        }
        "master" | "laurea magistrale" | "magistrale" | "lm" | "msc" => Some(CourseLevel::Master),
        "bachelor and master" | "bachelor & master" | "single cycle" | "ciclo unico"
        | "laurea magistrale a ciclo unico" | "lmcu" => Some(CourseLevel::BachelorAndMaster),
        _ => None,
    }
}

const COUNTRY_ALIASES: &[(&str, &str)] = &[
    ("italy", "IT"),
    ("italia", "IT"),
    ("ita", "IT"),
    ("albania", "AL"),
    ("alb", "AL"),
    ("morocco", "MA"),
    ("marocco", "MA"),
    ("mar", "MA"),
    ("romania", "RO"),
    ("rou", "RO"),
    ("china", "CN"),
    ("cina", "CN"),
    ("chn", "CN"),
    ("peru", "PE"),
    ("per", "PE"),
    ("ukraine", "UA"),
    ("ucraina", "UA"),
    ("ukr", "UA"),
    ("egypt", "EG"),
    ("egitto", "EG"),
    ("egy", "EG"),
    ("philippines", "PH"),
    ("filippine", "PH"),
    ("phl", "PH"),
    ("india", "IN"),
    ("ind", "IN"),
    ("ecuador", "EC"),
    ("ecu", "EC"),
    ("moldova", "MD"),
    ("mda", "MD"),
    ("sri lanka", "LK"),
    ("lka", "LK"),
];

/// Country of birth or citizenship as an upper-case two-letter code.
pub fn country(raw: &str) -> Option<CountryCode> {
    let folded = fold(raw);
    if let Some((_, code)) = COUNTRY_ALIASES.iter().find(|(alias, _)| *alias == folded) {
        return Some(CountryCode::new(*code));
    }
    if folded.len() == 2 && folded.chars().all(|c| c.is_ascii_alphabetic()) {
        return Some(CountryCode::new(folded.to_ascii_uppercase()));
    }
    None
}

/// Department names: case-folded, whitespace collapsed to `_`.
pub fn department(raw: &str) -> Option<String> {
    let folded = fold(raw);
    if folded.is_empty() {
        return None;
    }
    Some(folded.replace(' ', "_"))
}

pub fn flag(raw: &str) -> Option<bool> {
    match fold(raw).as_str() {
        "1" | "true" | "yes" | "y" | "si" | "sì" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}
