use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{read_to_string, Dataset};
use crate::error::{Error, Result};

/// Per-pair values of one metric. Insertion order is preserved and used
/// for output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreColumn {
    pub metric_name: String,
    pub higher_is_better: bool,
    pub values: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coverage {
    /// Dataset pairs without a value.
    pub missing: Vec<String>,
    /// Values for pairs the dataset does not contain.
    pub unknown: Vec<String>,
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.unknown.is_empty()
    }
}

impl ScoreColumn {
    pub fn new(metric_name: impl Into<String>, higher_is_better: bool) -> Self {
        ScoreColumn {
            metric_name: metric_name.into(),
            higher_is_better,
            values: IndexMap::new(),
        }
    }

    /// Inserts a value, rejecting non-finite numbers and repeated ids.
    pub fn insert(&mut self, pair_id: impl Into<String>, value: f64) -> Result<()> {
        let pair_id = pair_id.into();
        if !value.is_finite() {
            return Err(Error::NaNValue(pair_id));
        }
        if self.values.contains_key(&pair_id) {
            return Err(Error::DuplicateId(pair_id));
        }
        self.values.insert(pair_id, value);
        Ok(())
    }

    pub fn get(&self, pair_id: &str) -> Option<f64> {
        self.values.get(pair_id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coverage(&self, dataset: &Dataset) -> Coverage {
        Coverage {
            missing: dataset
                .pair_ids()
                .filter(|id| !self.values.contains_key(*id))
                .map(str::to_string)
                .collect(),
            unknown: self
                .values
                .keys()
                .filter(|id| !dataset.contains(id))
                .cloned()
                .collect(),
        }
    }
}

pub fn load_score_column(path: &Path) -> Result<ScoreColumn> {
    parse_score_column(&read_to_string(path)?)
}

fn parse_direction(s: &str, line: usize) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "higher" | "true" | "1" => Ok(true),
        "lower" | "false" | "0" => Ok(false),
        other => Err(Error::parse(
            line,
            format!("higher_is_better must be higher/lower, got `{other}`"),
        )),
    }
}

/// Parses `metric_name,higher_is_better` followed by `pair_id,value` rows.
pub fn parse_score_column(text: &str) -> Result<ScoreColumn> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "empty score file")),
    };
    if header.len() != 2 || header[0].trim().is_empty() {
        return Err(Error::parse(1, "header must be `metric_name,higher_is_better`"));
    }
    let mut column = ScoreColumn::new(header[0].trim(), parse_direction(&header[1], 1)?);

    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::parse(line, "expected `pair_id,value`"));
        }
        let pair_id = record[0].trim().to_string();
        let value: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad number `{}`", &record[1])))?;
        column.insert(pair_id, value)?;
    }
    Ok(column)
}

pub fn write_score_column(column: &ScoreColumn) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let direction = if column.higher_is_better {
        "higher"
    } else {
        "lower"
    };
    w.write_record([column.metric_name.as_str(), direction])
        .expect("in-memory write");
    for (id, v) in &column.values {
        w.write_record([id.as_str(), &v.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Several score columns over a common, ordered set of pair ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub pair_ids: Vec<String>,
    pub columns: Vec<ScoreColumn>,
}

impl ScoreTable {
    pub fn new(pair_ids: Vec<String>) -> Self {
        ScoreTable {
            pair_ids,
            columns: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&ScoreColumn> {
        self.columns.iter().find(|c| c.metric_name == name)
    }

    pub fn metric_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.metric_name.as_str())
    }

    /// Adds or replaces a column with the same metric name.
    pub fn push(&mut self, column: ScoreColumn) {
        match self
            .columns
            .iter_mut()
            .find(|c| c.metric_name == column.metric_name)
        {
            Some(slot) => *slot = column,
            None => self.columns.push(column),
        }
    }
}

pub fn load_score_table(path: &Path) -> Result<ScoreTable> {
    parse_score_table(&read_to_string(path)?)
}

/// Wide CSV: header `pair_id,<metric>...`; an empty cell means no value.
pub fn parse_score_table(text: &str) -> Result<ScoreTable> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("pair_id") {
        return Err(Error::parse(1, "first column must be `pair_id`"));
    }
    let mut table = ScoreTable::new(Vec::new());
    table.columns = headers
        .iter()
        .skip(1)
        .map(|name| ScoreColumn::new(name, true))
        .collect();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let pair_id = record[0].to_string();
        if table.pair_ids.contains(&pair_id) {
            return Err(Error::DuplicateId(pair_id));
        }
        for (cell, column) in record.iter().skip(1).zip(table.columns.iter_mut()) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number `{cell}`")))?;
            column.insert(pair_id.clone(), v)?;
        }
        table.pair_ids.push(pair_id);
    }
    Ok(table)
}

pub fn write_score_table(table: &ScoreTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pair_id"];
    header.extend(table.metric_names());
    w.write_record(&header).expect("in-memory write");
    for id in &table.pair_ids {
        let mut row = vec![id.clone()];
        row.extend(
            table
                .columns
                .iter()
                .map(|c| c.get(id).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
