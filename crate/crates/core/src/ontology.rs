//! Canonical section categories and surface-form normalization.
//!
//! The taxonomy file is a CSV with header `surface_form,category,level`,
//! where `level` is `coarse` or `fine`. Categories are declared by appearing
//! as a target. A row with an empty `surface_form` declares a category
//! explicitly; once any such row exists, every target must be declared.
//! `UNKNOWN` is always present.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedDocument;

pub const UNKNOWN: &str = "UNKNOWN";

/// Default edit-ratio ceiling for fuzzy category lookup.
pub const DEFAULT_CATEGORY_RATIO: f64 = 0.15;

const SHIPPED_TAXONOMY: &str = include_str!("../data/taxonomy.csv");
const SHIPPED_INVENTORY: &str = include_str!("../data/section_inventory.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Coarse,
    Fine,
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("taxonomy format error: {0}")]
    Format(String),
    #[error("surface form {surface:?} maps to undeclared category {category:?}")]
    DanglingCategory { surface: String, category: String },
    #[error("corpus has no sections")]
    EmptyCorpus,
}

/// Lowercase, trim, collapse whitespace and strip surrounding punctuation.
/// Brackets are kept so parenthesised qualifiers survive intact.
pub fn normalize_surface(name: &str) -> String {
    let lowered = name.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped = collapsed.trim_matches(|c: char| {
        !(c.is_alphanumeric() || matches!(c, '(' | ')' | '[' | ']'))
    });
    if stripped.chars().any(char::is_alphanumeric) {
        stripped.to_string()
    } else {
        String::new()
    }
}

/// Levenshtein distance divided by the longer string's length (in chars).
pub fn edit_ratio(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    strsim::levenshtein(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    categories: BTreeSet<String>,
    coarse_categories: BTreeSet<String>,
    coarse: HashMap<String, String>,
    fine: HashMap<String, String>,
    // sorted keys so fuzzy search is deterministic
    coarse_keys: Vec<String>,
    fine_keys: Vec<String>,
    fuzzy_ratio: f64,
}

impl Ontology {
    /// The taxonomy bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_csv_str(SHIPPED_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn from_csv_str(content: &str) -> Result<Self, OntologyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(content.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| OntologyError::Format(e.to_string()))?
            .clone();
        let expected = ["surface_form", "category", "level"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(OntologyError::Format(format!(
                "expected header `surface_form,category,level`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }

        let mut declared = BTreeSet::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| OntologyError::Format(e.to_string()))?;
            let surface = record.get(0).unwrap_or_default();
            let category = record.get(1).unwrap_or_default();
            let level = match record.get(2).unwrap_or_default() {
                "coarse" | "" => Level::Coarse,
                "fine" => Level::Fine,
                other => {
                    return Err(OntologyError::Format(format!(
                        "row {}: unknown level {other:?}",
                        i + 2
                    )))
                }
            };
            if category.is_empty() {
                return Err(OntologyError::Format(format!("row {}: empty category", i + 2)));
            }
            if surface.is_empty() {
                declared.insert((category.to_string(), level));
            } else {
                rows.push((surface.to_string(), category.to_string(), level));
            }
        }
        if rows.is_empty() && declared.is_empty() {
            return Err(OntologyError::Format(
                "no categories declared (UNKNOWN would be the only category)".into(),
            ));
        }

        let explicit = !declared.is_empty();
        let mut ont = Ontology {
            categories: BTreeSet::new(),
            coarse_categories: BTreeSet::new(),
            coarse: HashMap::new(),
            fine: HashMap::new(),
            coarse_keys: Vec::new(),
            fine_keys: Vec::new(),
            fuzzy_ratio: DEFAULT_CATEGORY_RATIO,
        };
        for (category, level) in &declared {
            ont.declare(category, *level);
        }
        for (surface, category, level) in rows {
            if explicit && category != UNKNOWN && !ont.categories.contains(&category) {
                return Err(OntologyError::DanglingCategory { surface, category });
            }
            let key = normalize_surface(&surface);
            if key.is_empty() {
                return Err(OntologyError::Format(format!(
                    "surface form {surface:?} normalizes to nothing"
                )));
            }
            ont.declare(&category, level);
            let map = match level {
                Level::Coarse => &mut ont.coarse,
                Level::Fine => &mut ont.fine,
            };
            if let Some(prev) = map.insert(key.clone(), category.clone()) {
                if prev != category {
                    return Err(OntologyError::Format(format!(
                        "surface form {key:?} maps to both {prev:?} and {category:?}"
                    )));
                }
            }
        }
        ont.categories.insert(UNKNOWN.to_string());
        ont.coarse_categories.insert(UNKNOWN.to_string());
        ont.coarse_keys = ont.coarse.keys().cloned().collect();
        ont.coarse_keys.sort();
        ont.fine_keys = ont.fine.keys().cloned().collect();
        ont.fine_keys.sort();
        Ok(ont)
    }

    fn declare(&mut self, category: &str, level: Level) {
        self.categories.insert(category.to_string());
        if level == Level::Coarse {
            self.coarse_categories.insert(category.to_string());
        }
    }

    /// Override the fuzzy lookup ceiling (default 0.15).
    pub fn with_fuzzy_ratio(mut self, ratio: f64) -> Self {
        self.fuzzy_ratio = ratio;
        self
    }

    pub fn fuzzy_ratio(&self) -> f64 {
        self.fuzzy_ratio
    }

    /// Every category name at any level, including `UNKNOWN`.
    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }

    /// Categories that are targets of coarse entries, including `UNKNOWN`.
    pub fn coarse_categories(&self) -> &BTreeSet<String> {
        &self.coarse_categories
    }

    /// Normalized surface forms at the given level, sorted.
    pub fn surface_forms(&self, level: Level) -> &[String] {
        match level {
            Level::Coarse => &self.coarse_keys,
            Level::Fine => &self.fine_keys,
        }
    }

    /// Coarse category of an already-normalized surface form, if listed.
    pub fn lookup(&self, normalized: &str) -> Option<&str> {
        self.coarse.get(normalized).map(String::as_str)
    }

    /// Map a free-form section name to its coarse category.
    pub fn categorize(&self, name: &str, fuzzy: bool) -> &str {
        self.categorize_level(name, Level::Coarse, fuzzy)
    }

    /// Map a name at the requested level. Fine lookups fall back to the coarse
    /// category when no fine entry matches.
    pub fn categorize_level(&self, name: &str, level: Level, fuzzy: bool) -> &str {
        let key = normalize_surface(name);
        if key.is_empty() {
            return UNKNOWN;
        }
        if level == Level::Fine {
            if let Some(c) = self.find(&self.fine, &self.fine_keys, &key, fuzzy) {
                return c;
            }
        }
        self.find(&self.coarse, &self.coarse_keys, &key, fuzzy)
            .unwrap_or(UNKNOWN)
    }

    fn find<'a>(
        &'a self,
        map: &'a HashMap<String, String>,
        keys: &'a [String],
        key: &str,
        fuzzy: bool,
    ) -> Option<&'a str> {
        if let Some(c) = map.get(key) {
            return Some(c);
        }
        if !fuzzy {
            return None;
        }
        let key_len = key.chars().count();
        let mut best: Option<(usize, &String)> = None;
        for candidate in keys {
            let cand_len = candidate.chars().count();
            let longest = key_len.max(cand_len);
            // length difference is a lower bound on the distance
            if key_len.abs_diff(cand_len) as f64 > self.fuzzy_ratio * longest as f64 {
                continue;
            }
            let dist = strsim::levenshtein(key, candidate);
            if dist as f64 / longest as f64 <= self.fuzzy_ratio
                && best.is_none_or(|(d, _)| dist < d)
            {
                best = Some((dist, candidate));
            }
        }
        best.map(|(_, k)| map[k].as_str())
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology, OntologyError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ontology::from_csv_str(&content)
}

/// Per-category occurrence statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    /// Distinct normalized surface forms seen for this category.
    pub section_count: usize,
    /// Total occurrences.
    pub frequency: u64,
    pub frequency_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Sorted by descending frequency, then category name.
    pub categories: Vec<CategoryCount>,
    pub total_sections: u64,
}

impl CategoryStats {
    pub fn get(&self, category: &str) -> Option<&CategoryCount> {
        self.categories.iter().find(|c| c.category == category)
    }

    /// Aggregate `(surface form, occurrences)` pairs by coarse category.
    pub fn from_counts<'a, I>(counts: I, ont: &Ontology) -> Result<Self, OntologyError>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut per: BTreeMap<String, (BTreeSet<String>, u64)> = BTreeMap::new();
        let mut total = 0u64;
        for (surface, n) in counts {
            if n == 0 {
                continue;
            }
            let category = ont.categorize(surface, true).to_string();
            let entry = per.entry(category).or_default();
            entry.0.insert(normalize_surface(surface));
            entry.1 += n;
            total += n;
        }
        if total == 0 {
            return Err(OntologyError::EmptyCorpus);
        }
        let mut categories: Vec<CategoryCount> = per
            .into_iter()
            .map(|(category, (forms, frequency))| CategoryCount {
                category,
                section_count: forms.len(),
                frequency,
                frequency_pct: frequency as f64 / total as f64 * 100.0,
            })
            .collect();
        categories.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.category.cmp(&b.category)));
        Ok(CategoryStats {
            categories,
            total_sections: total,
        })
    }
}

/// Category statistics over every annotated header in a corpus.
pub fn category_stats(docs: &[AnnotatedDocument], ont: &Ontology) -> Result<CategoryStats, OntologyError> {
    CategoryStats::from_counts(
        docs.iter()
            .flat_map(|d| d.sections.iter().map(|s| (s.raw_header.as_str(), 1))),
        ont,
    )
}

/// Parse a `surface_form,frequency` inventory CSV.
pub fn parse_inventory(content: &str) -> Result<Vec<(String, u64)>, OntologyError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| OntologyError::Format(e.to_string()))?;
        let surface = record.get(0).unwrap_or_default().to_string();
        let freq = record
            .get(1)
            .unwrap_or_default()
            .parse::<u64>()
            .map_err(|e| OntologyError::Format(format!("{surface:?}: {e}")))?;
        out.push((surface, freq));
    }
    Ok(out)
}

/// Section-name occurrence counts from the annotated real-world corpus,
/// bundled with the crate. Occurrences of forms not individually listed are
/// pooled under their category's own name.
pub fn shipped_inventory() -> Vec<(String, u64)> {
    parse_inventory(SHIPPED_INVENTORY).expect("bundled inventory is valid")
}
