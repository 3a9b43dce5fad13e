//! Reference-based and reference-free evaluation of generated clinical
//! notes, and meta-evaluation of the metrics against human judgements.
//!
//! Modules are layered bottom-up: [`text`] and [`data`] feed the metric
//! modules ([`lexical`], [`greedy`], [`concepts`], [`likelihood`]), human
//! annotations become per-pair criteria in [`refscores`], and
//! [`analysis`] correlates the two.

pub mod analysis;
pub mod concepts;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod greedy;
pub mod lexical;
pub mod likelihood;
pub mod prf;
pub mod refscores;
pub mod text;

pub use data::{Dataset, FactAnnotation, KeyPhraseAnnotation, ScoreColumn, ScoreTable, SummaryPair};
pub use error::{Error, Result};
pub use prf::Prf;
pub use text::{Normalization, TokenSequence, Window};
