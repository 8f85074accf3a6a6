use std::collections::{HashMap, HashSet};

use super::{AdminRecord, SurveyRecord};

/// Result of the exact join between register and survey.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkedDataset {
    /// Matched pairs, in survey order.
    pub matched: Vec<(AdminRecord, SurveyRecord)>,
    /// Register rows without a survey row, in register order.
    pub unmatched_admin: Vec<AdminRecord>,
    pub unmatched_survey: Vec<SurveyRecord>,
}

impl LinkedDataset {
    pub fn survey_len(&self) -> usize {
        self.matched.len() + self.unmatched_survey.len()
    }
}

/// Exact equality join on `link_key`. Both inputs are expected to have unique
/// keys, which the parsers guarantee.
pub fn link(admin: &[AdminRecord], survey: &[SurveyRecord]) -> LinkedDataset {
    let by_key: HashMap<&str, &AdminRecord> =
        admin.iter().map(|a| (a.link_key.as_str(), a)).collect();
    let mut out = LinkedDataset::default();
    let mut used = HashSet::new();
    for s in survey {
        match by_key.get(s.link_key.as_str()) {
            Some(a) if used.insert(s.link_key.as_str()) => {
                out.matched.push(((*a).clone(), s.clone()))
            }
            _ => out.unmatched_survey.push(s.clone()),
        }
    }
    out.unmatched_admin = admin
        .iter()
        .filter(|a| !used.contains(a.link_key.as_str()))
        .cloned()
        .collect();
    log::info!(
        "linked {} survey rows; {} unmatched survey, {} register rows without survey",
        out.matched.len(),
        out.unmatched_survey.len(),
        out.unmatched_admin.len()
    );
    out
}
