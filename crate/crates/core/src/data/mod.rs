//! Domain types and file ingestion for datasets, human annotations and
//! score columns.
//!
//! Every loader is total-or-error: a value it returns satisfies all of its
//! type invariants.

mod annotations;
mod dataset;
mod scores;

pub use annotations::{
    load_fact_annotations, load_keyphrase_annotations, parse_fact_annotations,
    parse_keyphrase_annotations, write_fact_annotations, write_keyphrase_annotations,
    FactAnnotation, HallucinatedSpan, KeyPhraseAnnotation, OmissionMarker,
};
pub use dataset::{
    load_dataset, parse_dataset_csv, parse_dataset_jsonl, write_dataset_csv, write_dataset_jsonl,
    AnnotationKind, DataFormat, Dataset, Section, SummaryPair,
};
pub use scores::{
    load_score_column, load_score_table, parse_score_column, parse_score_table,
    write_score_column, write_score_table, Coverage, ScoreColumn, ScoreTable,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Iterates non-blank lines with 1-based line numbers.
pub(crate) fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub(crate) fn require<T>(value: Option<T>, name: &str, line: usize) -> Result<T> {
    value.ok_or_else(|| Error::MissingField {
        name: name.to_string(),
        line,
    })
}
