//! Lexicon-based concept linking and the knowledge-graph embedding
//! similarity score (MIST).

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::read_to_string;
use crate::embeddings::{cosine, EmbeddingStore};
use crate::error::{Error, Result};
use crate::text::{tokenize, Normalization};

/// Lowercases and drops every non-alphanumeric character, so raw surfaces,
/// whitespace tokens and model subwords (`▁chest`, `##ing`) all compare
/// against the lexicon's normalized forms.
pub fn normalize_token(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptLexicon {
    entries: HashMap<Vec<String>, String>,
    max_entry_len: usize,
}

impl ConceptLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a surface form; it is normalized with `LowerAlnum` tokenization.
    pub fn insert(&mut self, surface: &str, concept_id: &str) -> Result<()> {
        let key = tokenize(surface, Normalization::LowerAlnum).to_strings();
        if key.is_empty() {
            return Err(Error::Lexicon(format!(
                "surface `{surface}` has no alphanumeric content"
            )));
        }
        let concept_id = concept_id.trim();
        if concept_id.is_empty() {
            return Err(Error::Lexicon(format!("empty concept id for `{surface}`")));
        }
        match self.entries.get(&key) {
            Some(existing) if existing != concept_id => Err(Error::Lexicon(format!(
                "surface `{surface}` maps to both {existing} and {concept_id}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.max_entry_len = self.max_entry_len.max(key.len());
                self.entries.insert(key, concept_id.to_string());
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_entry_len(&self) -> usize {
        self.max_entry_len
    }

    fn lookup(&self, key: &[String]) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

pub fn load_lexicon(path: &Path) -> Result<ConceptLexicon> {
    parse_lexicon(&read_to_string(path)?)
}

/// TSV `surface_form<TAB>concept_id`; blank lines and `#` comments skipped.
pub fn parse_lexicon(text: &str) -> Result<ConceptLexicon> {
    let mut lexicon = ConceptLexicon::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected `surface<TAB>concept_id`"))?;
        lexicon
            .insert(surface, id)
            .map_err(|e| Error::parse(i + 1, e.to_string()))?;
    }
    Ok(lexicon)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMention {
    pub concept_id: String,
    /// Token index range `[start, end)`.
    pub start: usize,
    pub end: usize,
}

/// Concept mentions in token order; a multiset of concept ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSet {
    pub mentions: Vec<ConceptMention>,
}

impl ConceptSet {
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Self {
        ConceptSet {
            mentions: ids
                .iter()
                .enumerate()
                .map(|(i, id)| ConceptMention {
                    concept_id: id.as_ref().to_string(),
                    start: i,
                    end: i + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    pub fn count(&self, concept_id: &str) -> usize {
        self.mentions
            .iter()
            .filter(|m| m.concept_id == concept_id)
            .count()
    }

    /// Distinct ids in first-mention order.
    pub fn unique_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .map(|m| m.concept_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    /// Which of `n` tokens fall inside a mention.
    pub fn covered(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for m in &self.mentions {
            for slot in mask.iter_mut().take(m.end.min(n)).skip(m.start) {
                *slot = true;
            }
        }
        mask
    }
}

/// Greedy longest match, left to right, without overlaps.
pub fn link_concepts<S: AsRef<str>>(tokens: &[S], lexicon: &ConceptLexicon) -> ConceptSet {
    let mut set = ConceptSet::default();
    if lexicon.is_empty() {
        return set;
    }
    let normalized: Vec<String> = tokens.iter().map(|t| normalize_token(t.as_ref())).collect();

    let mut i = 0;
    while i < normalized.len() {
        let longest = lexicon.max_entry_len().min(normalized.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let span = &normalized[i..i + len];
            if span.iter().any(String::is_empty) {
                return None;
            }
            lexicon.lookup(span).map(|id| (len, id))
        });
        match hit {
            Some((len, id)) => {
                set.mentions.push(ConceptMention {
                    concept_id: id.to_string(),
                    start: i,
                    end: i + len,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MistMode {
    /// Average over reference concepts of the best system match.
    #[default]
    Recall,
    /// Sum over system concepts of the best reference match, divided by the
    /// number of reference concepts. Can exceed 1.
    Verbatim,
}

impl std::str::FromStr for MistMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "recall" => Ok(MistMode::Recall),
            "verbatim" => Ok(MistMode::Verbatim),
            other => Err(format!("unknown MIST mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MistScore {
    pub value: f64,
    pub reference_used: usize,
    pub system_used: usize,
    /// Distinct concepts without a KGE vector, skipped.
    pub reference_skipped: usize,
    pub system_skipped: usize,
}

/// MIST over distinct concepts. Concepts missing from the KGE store are
/// skipped and counted.
pub fn mist(
    sys: &ConceptSet,
    reference: &ConceptSet,
    kge: &EmbeddingStore,
    mode: MistMode,
) -> Result<MistScore> {
    let split = |set: &ConceptSet| {
        let ids = set.unique_ids();
        let total = ids.len();
        let vectors: Vec<&[f64]> = ids.into_iter().filter_map(|id| kge.get(id)).collect();
        let skipped = total - vectors.len();
        (vectors, skipped)
    };
    let (ref_vecs, reference_skipped) = split(reference);
    let (sys_vecs, system_skipped) = split(sys);

    if ref_vecs.is_empty() {
        return Err(Error::UndefinedScore(
            "no reference concepts with KGE vectors".into(),
        ));
    }

    let value = if sys_vecs.is_empty() {
        0.0
    } else {
        let (outer, inner) = match mode {
            MistMode::Recall => (&ref_vecs, &sys_vecs),
            MistMode::Verbatim => (&sys_vecs, &ref_vecs),
        };
        let mut total = 0.0;
        for a in outer.iter() {
            total += best_match(a, inner)?;
        }
        total / ref_vecs.len() as f64
    };

    Ok(MistScore {
        value,
        reference_used: ref_vecs.len(),
        system_used: sys_vecs.len(),
        reference_skipped,
        system_skipped,
    })
}

fn best_match(a: &[f64], candidates: &[&[f64]]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for b in candidates {
        best = best.max(cosine(a, b)?);
    }
    Ok(best)
}
