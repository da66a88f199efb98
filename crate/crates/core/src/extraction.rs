//! Gazetteer-backed extraction of named places and their mention counts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoBoundingBox, GeoCoordinate, WeightedPlace};

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("failed to read gazetteer: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid {field}: {message}")]
    Invalid {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: duplicate place name {name:?} (first defined on line {first_line})")]
    DuplicateName {
        line: usize,
        name: String,
        first_line: usize,
    },
    #[error("gazetteer is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub name: String,
    pub coordinate: GeoCoordinate,
    pub bbox: GeoBoundingBox,
}

fn fold(s: &str) -> Vec<char> {
    s.chars().flat_map(char::to_lowercase).collect()
}

/// Place-name dictionary, immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_folded: HashMap<String, usize>,
    // folded names bucketed by first char, longest first
    buckets: HashMap<char, Vec<(Vec<char>, usize)>>,
}

impl Gazetteer {
    pub fn from_entries(
        entries: impl IntoIterator<Item = GazetteerEntry>,
    ) -> Result<Self, GazetteerError> {
        let mut g = Gazetteer::default();
        for (i, e) in entries.into_iter().enumerate() {
            g.insert(e, i + 1)?;
        }
        Ok(g)
    }

    fn insert(&mut self, entry: GazetteerEntry, line: usize) -> Result<(), GazetteerError> {
        if entry.name.trim().is_empty() {
            return Err(GazetteerError::Invalid {
                line,
                field: "name",
                message: "empty name".into(),
            });
        }
        if !entry.bbox.contains(&entry.coordinate) {
            return Err(GazetteerError::Invalid {
                line,
                field: "bbox",
                message: format!("coordinate {} lies outside the bounding box", entry.coordinate),
            });
        }
        let folded = fold(&entry.name);
        let key: String = folded.iter().collect();
        if let Some(&idx) = self.by_folded.get(&key) {
            return Err(GazetteerError::DuplicateName {
                line,
                name: entry.name,
                first_line: idx + 1,
            });
        }
        let idx = self.entries.len();
        self.by_folded.insert(key, idx);
        let bucket = self.buckets.entry(folded[0]).or_default();
        bucket.push((folded, idx));
        bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        self.entries.push(entry);
        Ok(())
    }

    /// Loads the tab-separated gazetteer format:
    /// `name lat lon south north west east`, `#` lines are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GazetteerError> {
        let reader = BufReader::new(File::open(path)?);
        let mut g = Gazetteer::default();
        // line numbers of entries, so duplicate errors can point at the original row
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let entry = parse_row(trimmed, lineno)?;
            match g.insert(entry, lineno) {
                Err(GazetteerError::DuplicateName {
                    line, name, first_line,
                }) => {
                    return Err(GazetteerError::DuplicateName {
                        line,
                        name,
                        first_line: lines[first_line - 1],
                    })
                }
                other => other?,
            }
            lines.push(lineno);
        }
        if g.is_empty() {
            return Err(GazetteerError::Empty);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    /// Case-insensitive exact-name lookup.
    pub fn lookup(&self, name: &str) -> Option<&GazetteerEntry> {
        let key: String = fold(name.trim()).into_iter().collect();
        self.by_folded.get(&key).map(|&i| &self.entries[i])
    }

    /// Counts gazetteer names in `text` with case-insensitive, word-bounded,
    /// leftmost-longest, non-overlapping matching.
    ///
    /// Output is sorted by descending weight, then name.
    pub fn extract(&self, text: &str) -> Vec<WeightedPlace> {
        let chars = fold(text);
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        let mut i = 0;
        while i < chars.len() {
            let at_boundary = i == 0 || !chars[i - 1].is_alphanumeric();
            let matched = if at_boundary {
                self.longest_match_at(&chars, i)
            } else {
                None
            };
            match matched {
                Some((len, idx)) => {
                    *counts.entry(idx).or_insert(0) += 1;
                    i += len;
                }
                None => i += 1,
            }
        }
        let mut places: Vec<WeightedPlace> = counts
            .into_iter()
            .map(|(idx, weight)| {
                let e = &self.entries[idx];
                WeightedPlace::new(e.name.clone(), e.coordinate, e.bbox, weight)
            })
            .collect();
        places.sort_by(|a, b| b.weight.cmp(&a.weight).then_with(|| a.name.cmp(&b.name)));
        places
    }

    fn longest_match_at(&self, chars: &[char], start: usize) -> Option<(usize, usize)> {
        let bucket = self.buckets.get(&chars[start])?;
        bucket.iter().find_map(|(name, idx)| {
            let end = start + name.len();
            if end > chars.len() || chars[start..end] != name[..] {
                return None;
            }
            if end < chars.len() && chars[end].is_alphanumeric() {
                return None;
            }
            Some((name.len(), *idx))
        })
    }
}

fn parse_row(line: &str, lineno: usize) -> Result<GazetteerEntry, GazetteerError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 7 {
        return Err(GazetteerError::Parse {
            line: lineno,
            message: format!("expected 7 tab-separated columns, found {}", cols.len()),
        });
    }
    let num = |idx: usize, field: &'static str| -> Result<f64, GazetteerError> {
        cols[idx]
            .trim()
            .parse::<f64>()
            .map_err(|e| GazetteerError::Invalid {
                line: lineno,
                field,
                message: format!("{:?}: {e}", cols[idx]),
            })
    };
    let name = cols[0].trim().to_string();
    let lat = num(1, "lat")?;
    let lon = num(2, "lon")?;
    let south = num(3, "south")?;
    let north = num(4, "north")?;
    let west = num(5, "west")?;
    let east = num(6, "east")?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(GazetteerError::Invalid {
            line: lineno,
            field: "lat",
            message: format!("{lat} is outside [-90, 90]"),
        });
    }
    let coordinate = GeoCoordinate::new(lat, lon).map_err(|e| GazetteerError::Invalid {
        line: lineno,
        field: "lon",
        message: e.to_string(),
    })?;
    let bbox =
        GeoBoundingBox::new(south, north, west, east).map_err(|e| GazetteerError::Invalid {
            line: lineno,
            field: "bbox",
            message: e.to_string(),
        })?;
    Ok(GazetteerEntry {
        name,
        coordinate,
        bbox,
    })
}

/// One news article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub text: String,
    pub published: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

/// Anything that can turn an article into weighted places. The gazetteer
/// matcher is the built-in implementation.
pub trait PlaceExtractor: Send + Sync {
    fn extract_places(&self, article: &ArticleRecord) -> Vec<WeightedPlace>;
}

impl PlaceExtractor for Gazetteer {
    fn extract_places(&self, article: &ArticleRecord) -> Vec<WeightedPlace> {
        self.extract(&article.text)
    }
}

pub fn extract_weighted_places(article: &ArticleRecord, g: &Gazetteer) -> Vec<WeightedPlace> {
    g.extract(&article.text)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
}

/// A corpus line that could not be turned into an article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLineError {
    pub line: usize,
    pub message: String,
}

/// Reads a line-delimited JSON corpus. Bad lines are reported and skipped.
pub fn read_corpus(
    path: impl AsRef<Path>,
) -> Result<(Vec<ArticleRecord>, Vec<CorpusLineError>), CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut articles = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_article(&line) {
            Ok(a) if !seen.insert(a.id.clone()) => errors.push(CorpusLineError {
                line: i + 1,
                message: format!("duplicate article id {:?}", a.id),
            }),
            Ok(a) => articles.push(a),
            Err(message) => errors.push(CorpusLineError {
                line: i + 1,
                message,
            }),
        }
    }
    Ok((articles, errors))
}

pub fn parse_article(line: &str) -> Result<ArticleRecord, String> {
    let a: ArticleRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if a.id.is_empty() {
        return Err("article id is empty".into());
    }
    if a.text.trim().is_empty() {
        return Err(format!("article {:?} has empty text", a.id));
    }
    Ok(a)
}
