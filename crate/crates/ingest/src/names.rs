//! Reference table of given-name frequencies and the "common name" predicate.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::IngestError;

/// Lower-cases, strips diacritics, trims and collapses inner whitespace.
/// Idempotent.
pub fn normalize_name(raw: &str) -> String {
    let folded: String = raw
        .to_lowercase()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    count: u64,
    /// 1-based rank by descending count, ties broken by name.
    rank: usize,
}

/// Normalized given name -> occurrence count. Spellings that normalize to the
/// same key are merged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameFrequencyTable {
    entries: BTreeMap<String, Entry>,
    total_names: u64,
}

impl NameFrequencyTable {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (name, count) in counts {
            let key = normalize_name(name.as_ref());
            if key.is_empty() || count == 0 {
                continue;
            }
            *merged.entry(key).or_default() += count;
        }
        let mut order: Vec<(&String, &u64)> = merged.iter().collect();
        order.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let ranks: BTreeMap<String, usize> = order
            .iter()
            .enumerate()
            .map(|(i, (name, _))| ((*name).clone(), i + 1))
            .collect();
        let total_names = merged.values().sum();
        let entries = merged
            .into_iter()
            .map(|(name, count)| {
                let rank = ranks[&name];
                (name, Entry { count, rank })
            })
            .collect();
        Self {
            entries,
            total_names,
        }
    }

    pub fn count(&self, name: &str) -> Option<u64> {
        self.entries.get(&normalize_name(name)).map(|e| e.count)
    }

    pub fn rank(&self, name: &str) -> Option<usize> {
        self.entries.get(&normalize_name(name)).map(|e| e.rank)
    }

    /// Sum of all counts.
    pub fn total_names(&self) -> u64 {
        self.total_names
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.count))
    }
}

/// A name is common if its count reaches `min_count` or its rank is within
/// `top_k`. Either criterion may be disabled; with both disabled no name is
/// common.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommonNameRule {
    pub min_count: Option<u64>,
    pub top_k: Option<usize>,
}

impl Default for CommonNameRule {
    fn default() -> Self {
        Self {
            min_count: Some(5),
            top_k: None,
        }
    }
}

pub fn is_common_name(name: &str, table: &NameFrequencyTable, rule: &CommonNameRule) -> bool {
    let key = normalize_name(name);
    if key.is_empty() {
        warn!("empty given name treated as not common");
        return false;
    }
    let Some(entry) = table.entries.get(&key) else {
        return false;
    };
    rule.min_count.is_some_and(|m| entry.count >= m) || rule.top_k.is_some_and(|k| entry.rank <= k)
}

pub fn build_name_table(path: &Path) -> Result<NameFrequencyTable, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    parse_name_table(file)
}

/// Reads the two-column `name,count` format.
pub fn parse_name_table<R: Read>(reader: R) -> Result<NameFrequencyTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<String> = headers
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_lowercase())
        .collect();
    if cols != ["name", "count"] {
        return Err(IngestError::NameFileMalformed {
            line: 1,
            reason: format!("expected header `name,count`, got `{}`", cols.join(",")),
        });
    }
    let mut counts = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 2 {
            return Err(IngestError::NameFileMalformed {
                line,
                reason: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let name = row[0].trim();
        if normalize_name(name).is_empty() {
            return Err(IngestError::NameFileMalformed {
                line,
                reason: "empty name".into(),
            });
        }
        let count: u64 = row[1]
            .trim()
            .parse()
            .ok()
            .filter(|c| *c >= 1)
            .ok_or_else(|| IngestError::NameFileMalformed {
                line,
                reason: format!("count must be an integer >= 1, got `{}`", &row[1]),
            })?;
        counts.push((name.to_string(), count));
    }
    Ok(NameFrequencyTable::from_counts(counts))
}

/// Writes the table sorted by rank.
pub fn write_name_table<W: Write>(writer: W, table: &NameFrequencyTable) -> Result<(), IngestError> {
    let mut rows: Vec<(&str, &Entry)> = table.entries.iter().map(|(k, e)| (k.as_str(), e)).collect();
    rows.sort_by_key(|(_, e)| e.rank);
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["name", "count"])?;
    for (name, e) in rows {
        wtr.write_record([name, e.count.to_string().as_str()])?;
    }
    wtr.flush().map_err(|e| IngestError::io("<writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> NameFrequencyTable {
        parse_name_table("name,count\nMaria,120\nGiuseppe,80\nNiccolò,7\nAba,2\nmaria,5\n".as_bytes())
            .unwrap()
    }

    #[test]
    fn threshold_rule() {
        let t = fixture();
        let rule = CommonNameRule::default();
        assert!(is_common_name("Giuseppe", &t, &rule));
        assert!(is_common_name("niccolo", &t, &rule));
        assert!(!is_common_name("Aba", &t, &rule));
        assert!(!is_common_name("Xiaoling", &t, &rule));
        assert!(!is_common_name("   ", &t, &rule));
        assert_eq!(t.count("MARIA"), Some(125));
        assert_eq!(t.total_names(), 214);
    }

    #[test]
    fn top_k_rule() {
        let t = fixture();
        let rule = CommonNameRule {
            min_count: None,
            top_k: Some(2),
        };
        assert!(is_common_name("maria", &t, &rule));
        assert!(is_common_name("giuseppe", &t, &rule));
        assert!(!is_common_name("niccolò", &t, &rule));
    }

    #[test]
    fn spacing_and_case_do_not_matter() {
        let t = fixture();
        let rule = CommonNameRule::default();
        assert_eq!(
            is_common_name("  MARIA ", &t, &rule),
            is_common_name("maria", &t, &rule)
        );
        assert_eq!(normalize_name("  Anna   Maria "), "anna maria");
        assert_eq!(normalize_name("JOSÉ"), "jose");
    }

    #[test]
    fn malformed_rows() {
        for text in [
            "nome,n\nmaria,3\n",
            "name,count\nmaria,zero\n",
            "name,count\nmaria,0\n",
            "name,count\n,4\n",
            "name,count\nmaria,4,extra\n",
        ] {
            assert!(
                matches!(parse_name_table(text.as_bytes()), Err(IngestError::NameFileMalformed { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn write_then_parse() {
        let t = fixture();
        let mut buf = Vec::new();
        write_name_table(&mut buf, &t).unwrap();
        assert_eq!(parse_name_table(buf.as_slice()).unwrap(), t);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,24}") {
            let once = normalize_name(&s);
            prop_assert_eq!(normalize_name(&once), once);
        }
    }
}
