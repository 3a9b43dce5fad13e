use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{jsonl_lines, read_to_string, require};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Section {
    Hpi,
    Exam,
    Results,
    Assessment,
    Other,
}

impl Section {
    pub fn as_str(&self) -> &'static str {
        match self {
            Section::Hpi => "HPI",
            Section::Exam => "EXAM",
            Section::Results => "RESULTS",
            Section::Assessment => "ASSESSMENT",
            Section::Other => "OTHER",
        }
    }

    fn parse(s: &str) -> Option<Section> {
        match s.to_ascii_uppercase().as_str() {
            "HPI" => Some(Section::Hpi),
            "EXAM" => Some(Section::Exam),
            "RESULTS" => Some(Section::Results),
            "ASSESSMENT" => Some(Section::Assessment),
            "OTHER" => Some(Section::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryPair {
    pub pair_id: String,
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Section>,
    #[serde(default)]
    pub source: String,
    pub reference: String,
    pub system: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotationKind {
    Facts,
    KeyPhrases,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    /// Guesses the format from the file extension; JSONL unless `.csv`.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dataset_id: String,
    pub pairs: Vec<SummaryPair>,
    pub annotation_kind: AnnotationKind,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Builds a dataset, checking the pair invariants.
    pub fn new(dataset_id: impl Into<String>, pairs: Vec<SummaryPair>) -> Result<Self> {
        let dataset_id = dataset_id.into();
        let mut index = HashMap::with_capacity(pairs.len());
        for (i, pair) in pairs.iter().enumerate() {
            if pair.dataset_id != dataset_id {
                return Err(Error::parse(
                    i + 1,
                    format!(
                        "pair `{}` belongs to dataset `{}`, expected `{}`",
                        pair.pair_id, pair.dataset_id, dataset_id
                    ),
                ));
            }
            check_texts(pair, i + 1)?;
            if index.insert(pair.pair_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(pair.pair_id.clone()));
            }
        }
        Ok(Dataset {
            dataset_id,
            pairs,
            annotation_kind: AnnotationKind::None,
            index,
        })
    }

    pub fn with_annotation_kind(mut self, kind: AnnotationKind) -> Self {
        self.annotation_kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, pair_id: &str) -> Option<&SummaryPair> {
        self.index.get(pair_id).map(|&i| &self.pairs[i])
    }

    pub fn contains(&self, pair_id: &str) -> bool {
        self.index.contains_key(pair_id)
    }

    pub fn pair_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.pair_id.as_str())
    }
}

fn check_texts(pair: &SummaryPair, line: usize) -> Result<()> {
    if pair.pair_id.is_empty() {
        return Err(Error::parse(line, "empty pair_id"));
    }
    if pair.reference.is_empty() {
        return Err(Error::parse(
            line,
            format!("empty reference for `{}`", pair.pair_id),
        ));
    }
    if pair.system.is_empty() {
        return Err(Error::parse(
            line,
            format!("empty system text for `{}`", pair.pair_id),
        ));
    }
    Ok(())
}

/// Loads a dataset. Records lacking `dataset_id` take the file stem.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let text = read_to_string(path)?;
    let default_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    match format {
        DataFormat::Jsonl => parse_dataset_jsonl(&text, default_id),
        DataFormat::Csv => parse_dataset_csv(&text, default_id),
    }
}

#[derive(Deserialize)]
struct RawPair {
    pair_id: Option<String>,
    dataset_id: Option<String>,
    section: Option<String>,
    source: Option<String>,
    reference: Option<String>,
    system: Option<String>,
}

fn build_pair(raw: RawPair, default_id: &str, line: usize) -> Result<SummaryPair> {
    let section = match raw.section.as_deref() {
        None | Some("") => None,
        Some(s) => Some(
            Section::parse(s)
                .ok_or_else(|| Error::parse(line, format!("unknown section `{s}`")))?,
        ),
    };
    Ok(SummaryPair {
        pair_id: require(raw.pair_id, "pair_id", line)?,
        dataset_id: raw.dataset_id.unwrap_or_else(|| default_id.to_string()),
        section,
        source: raw.source.unwrap_or_default(),
        reference: require(raw.reference, "reference", line)?,
        system: require(raw.system, "system", line)?,
    })
}

fn assemble(pairs: Vec<(usize, SummaryPair)>, default_id: &str) -> Result<Dataset> {
    let dataset_id = pairs
        .first()
        .map(|(_, p)| p.dataset_id.clone())
        .unwrap_or_else(|| default_id.to_string());
    let mut seen = HashMap::new();
    for (line, pair) in &pairs {
        if pair.dataset_id != dataset_id {
            return Err(Error::parse(
                *line,
                format!(
                    "mixed dataset ids `{}` and `{}`",
                    dataset_id, pair.dataset_id
                ),
            ));
        }
        check_texts(pair, *line)?;
        if seen.insert(pair.pair_id.clone(), *line).is_some() {
            return Err(Error::DuplicateId(pair.pair_id.clone()));
        }
    }
    Dataset::new(dataset_id, pairs.into_iter().map(|(_, p)| p).collect())
}

pub fn parse_dataset_jsonl(text: &str, default_id: &str) -> Result<Dataset> {
    let mut pairs = Vec::new();
    for (line, content) in jsonl_lines(text) {
        let raw: RawPair =
            serde_json::from_str(content).map_err(|e| Error::parse(line, e.to_string()))?;
        pairs.push((line, build_pair(raw, default_id, line)?));
    }
    assemble(pairs, default_id)
}

pub fn parse_dataset_csv(text: &str, default_id: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let cols = [
        col("pair_id"),
        col("dataset_id"),
        col("section"),
        col("source"),
        col("reference"),
        col("system"),
    ];

    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |i: Option<usize>| i.and_then(|i| record.get(i)).map(str::to_string);
        let raw = RawPair {
            pair_id: get(cols[0]),
            dataset_id: get(cols[1]).filter(|s| !s.is_empty()),
            section: get(cols[2]),
            source: get(cols[3]),
            reference: get(cols[4]),
            system: get(cols[5]),
        };
        pairs.push((line, build_pair(raw, default_id, line)?));
    }
    assemble(pairs, default_id)
}

pub fn write_dataset_jsonl(dataset: &Dataset) -> String {
    let mut out = String::new();
    for pair in &dataset.pairs {
        out.push_str(&serde_json::to_string(pair).expect("pair serializes"));
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(dataset: &Dataset) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["pair_id", "dataset_id", "section", "source", "reference", "system"])
        .expect("in-memory write");
    for p in &dataset.pairs {
        writer
            .write_record([
                p.pair_id.as_str(),
                p.dataset_id.as_str(),
                p.section.map(|s| s.as_str()).unwrap_or(""),
                p.source.as_str(),
                p.reference.as_str(),
                p.system.as_str(),
            ])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}
