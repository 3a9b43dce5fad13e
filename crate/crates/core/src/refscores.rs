//! Scores derived from human annotations: factual precision/recall/F1,
//! hallucination and omission rates, key-phrase counts, the error-weighted
//! quality score and the aggregate of correlation coefficients.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::data::{
    Dataset, FactAnnotation, KeyPhraseAnnotation, ScoreColumn, SummaryPair,
};
use crate::error::{Error, Result};
use crate::prf::Prf;
use crate::text::{sentence_count, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactScores {
    pub factual_precision: f64,
    pub factual_recall: f64,
    pub factual_f1: f64,
    pub hallucination_rate: f64,
    pub omission_rate: f64,
    pub system_facts: u64,
    pub reference_facts: u64,
}

pub fn fact_scores(a: &FactAnnotation) -> Result<FactScores> {
    let system = a.system_facts();
    let mut undefined = Vec::new();
    if system == 0 {
        undefined.push("precision, hallucination (no system facts)");
    }
    if a.reference_facts == 0 {
        undefined.push("recall, omission (no reference facts)");
    }
    if !undefined.is_empty() {
        return Err(Error::UndefinedScore(format!(
            "pair `{}`: {}",
            a.pair_id,
            undefined.join("; ")
        )));
    }
    let (s, r) = (system as f64, a.reference_facts as f64);
    let prf = Prf::new(a.correct_facts as f64 / s, a.correct_facts as f64 / r);
    Ok(FactScores {
        factual_precision: prf.precision,
        factual_recall: prf.recall,
        factual_f1: prf.f1,
        hallucination_rate: a.hallucinated_facts as f64 / s,
        omission_rate: a.omitted_facts as f64 / r,
        system_facts: system,
        reference_facts: a.reference_facts,
    })
}

/// Per-pair reference criteria, each with its column name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    FactualP,
    FactualR,
    FactualF1,
    HallucRate,
    OmissionRate,
    HallucCount,
    OmissionCount,
}

impl Criterion {
    pub const FACTS: [Criterion; 5] = [
        Criterion::FactualP,
        Criterion::FactualR,
        Criterion::FactualF1,
        Criterion::HallucRate,
        Criterion::OmissionRate,
    ];
    pub const KEY_PHRASES: [Criterion; 2] = [Criterion::HallucCount, Criterion::OmissionCount];

    pub fn column_name(&self) -> &'static str {
        match self {
            Criterion::FactualP => "factual_p",
            Criterion::FactualR => "factual_r",
            Criterion::FactualF1 => "factual_f1",
            Criterion::HallucRate => "halluc_rate",
            Criterion::OmissionRate => "omission_rate",
            Criterion::HallucCount => "halluc_count",
            Criterion::OmissionCount => "omission_count",
        }
    }

    pub fn from_column_name(name: &str) -> Option<Criterion> {
        Criterion::FACTS
            .iter()
            .chain(&Criterion::KEY_PHRASES)
            .copied()
            .find(|c| c.column_name() == name)
    }

    pub fn higher_is_better(&self) -> bool {
        matches!(
            self,
            Criterion::FactualP | Criterion::FactualR | Criterion::FactualF1
        )
    }

    /// Value for one fact annotation; `None` when its denominator is zero.
    pub fn from_facts(&self, a: &FactAnnotation) -> Option<f64> {
        let system = a.system_facts() as f64;
        let reference = a.reference_facts as f64;
        let correct = a.correct_facts as f64;
        let div = |n: f64, d: f64| (d > 0.0).then(|| n / d);
        match self {
            Criterion::FactualP => div(correct, system),
            Criterion::FactualR => div(correct, reference),
            Criterion::FactualF1 => {
                let (p, r) = (div(correct, system)?, div(correct, reference)?);
                Some(Prf::new(p, r).f1)
            }
            Criterion::HallucRate => div(a.hallucinated_facts as f64, system),
            Criterion::OmissionRate => div(a.omitted_facts as f64, reference),
            Criterion::HallucCount | Criterion::OmissionCount => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyPhraseScores {
    pub hallucination_count: f64,
    pub omission_count: f64,
}

/// Span and marker counts normalized by word counts. Repeated spans count
/// every time.
pub fn keyphrase_scores(ann: &KeyPhraseAnnotation, pair: &SummaryPair) -> Result<KeyPhraseScores> {
    let sys_words = word_count(&pair.system);
    let ref_words = word_count(&pair.reference);
    if sys_words == 0 {
        return Err(Error::EmptyText(format!("system text of `{}`", pair.pair_id)));
    }
    if ref_words == 0 {
        return Err(Error::EmptyText(format!("reference text of `{}`", pair.pair_id)));
    }
    Ok(KeyPhraseScores {
        hallucination_count: ann.hallucinated_spans.len() as f64 / sys_words as f64,
        omission_count: ann.omission_markers.len() as f64 / ref_words as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub critical: u64,
    pub non_critical: u64,
    pub spelling_grammar: u64,
}

/// Normalized production error weights: critical 1, non-critical 1/3,
/// spelling/grammar/style 1/12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorWeights {
    pub critical: f64,
    pub non_critical: f64,
    pub spelling: f64,
}

impl Default for ErrorWeights {
    fn default() -> Self {
        ErrorWeights {
            critical: 1.0,
            non_critical: 1.0 / 3.0,
            spelling: 1.0 / 12.0,
        }
    }
}

pub fn error_score(e: &ErrorCounts, weights: &ErrorWeights) -> f64 {
    e.critical as f64 * weights.critical
        + e.non_critical as f64 * weights.non_critical
        + e.spelling_grammar as f64 * weights.spelling
}

/// `1 - error_score / max(sentences(summary), sentences(reference))`.
/// Unclamped unless `clamp01` is set.
pub fn quality_score(
    e: &ErrorCounts,
    weights: &ErrorWeights,
    summary: &str,
    reference: &str,
    clamp01: bool,
) -> Result<f64> {
    let sentences = sentence_count(summary).max(sentence_count(reference));
    if sentences == 0 {
        return Err(Error::EmptyText("summary and reference have no sentences".into()));
    }
    let q = 1.0 - error_score(e, weights) / sentences as f64;
    Ok(if clamp01 { q.clamp(0.0, 1.0) } else { q })
}

/// `(2F - H - O) / 4` over correlation coefficients.
pub fn aggregate_score(f: f64, h: f64, o: f64) -> f64 {
    (2.0 * f - h - o) / 4.0
}

/// How several annotators of the same pair are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotatorPolicy {
    #[default]
    Mean,
    First,
    /// One row per `(pair, annotator)`, keyed `pair_id@annotator_id`.
    PerAnnotator,
}

impl std::str::FromStr for AnnotatorPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(AnnotatorPolicy::Mean),
            "first" => Ok(AnnotatorPolicy::First),
            "per-annotator" => Ok(AnnotatorPolicy::PerAnnotator),
            other => Err(format!("unknown annotator policy `{other}`")),
        }
    }
}

/// Combines per-annotator values into rows in first-seen pair order.
fn combine(
    name: &str,
    higher: bool,
    items: impl Iterator<Item = (String, String, Option<f64>)>,
    policy: AnnotatorPolicy,
) -> Result<ScoreColumn> {
    let mut column = ScoreColumn::new(name, higher);
    let mut grouped: IndexMap<String, Vec<(String, Option<f64>)>> = IndexMap::new();
    for (pair, annotator, value) in items {
        grouped.entry(pair).or_default().push((annotator, value));
    }
    for (pair, values) in grouped {
        match policy {
            AnnotatorPolicy::Mean => {
                let defined: Vec<f64> = values.iter().filter_map(|(_, v)| *v).collect();
                if !defined.is_empty() {
                    column.insert(pair, defined.iter().sum::<f64>() / defined.len() as f64)?;
                }
            }
            AnnotatorPolicy::First => {
                if let Some(v) = values[0].1 {
                    column.insert(pair, v)?;
                }
            }
            AnnotatorPolicy::PerAnnotator => {
                for (annotator, v) in values {
                    if let Some(v) = v {
                        column.insert(format!("{pair}@{annotator}"), v)?;
                    }
                }
            }
        }
    }
    Ok(column)
}

/// One column per fact criterion. Pairs whose denominators are zero get no
/// value in the affected columns.
pub fn fact_criteria_columns(
    annotations: &[FactAnnotation],
    policy: AnnotatorPolicy,
) -> Result<Vec<ScoreColumn>> {
    Criterion::FACTS
        .iter()
        .map(|c| {
            combine(
                c.column_name(),
                c.higher_is_better(),
                annotations
                    .iter()
                    .map(|a| (a.pair_id.clone(), a.annotator_id.clone(), c.from_facts(a))),
                policy,
            )
        })
        .collect()
}

pub fn keyphrase_criteria_columns(
    annotations: &[KeyPhraseAnnotation],
    dataset: &Dataset,
    policy: AnnotatorPolicy,
) -> Result<Vec<ScoreColumn>> {
    let mut scored = Vec::with_capacity(annotations.len());
    for ann in annotations {
        let pair = dataset
            .get(&ann.pair_id)
            .ok_or_else(|| Error::UnknownPair(ann.pair_id.clone()))?;
        scored.push((ann, keyphrase_scores(ann, pair)?));
    }
    let halluc = combine(
        Criterion::HallucCount.column_name(),
        false,
        scored.iter().map(|(a, s)| {
            (a.pair_id.clone(), a.annotator_id.clone(), Some(s.hallucination_count))
        }),
        policy,
    )?;
    let omission = combine(
        Criterion::OmissionCount.column_name(),
        false,
        scored
            .iter()
            .map(|(a, s)| (a.pair_id.clone(), a.annotator_id.clone(), Some(s.omission_count))),
        policy,
    )?;
    Ok(vec![halluc, omission])
}

/// Pairs where recall plus omission rate exceeds 1, per annotator.
pub fn overlap_warnings(annotations: &[FactAnnotation]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for a in annotations.iter().filter(|a| a.overlapping_counts()) {
        out.entry(a.pair_id.clone())
            .or_default()
            .push(a.annotator_id.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{HallucinatedSpan, OmissionMarker};

    fn ann(c: u64, i: u64, h: u64, o: u64, r: u64) -> FactAnnotation {
        FactAnnotation {
            pair_id: "p".into(),
            annotator_id: "a".into(),
            correct_facts: c,
            incorrect_facts: i,
            hallucinated_facts: h,
            omitted_facts: o,
            reference_facts: r,
        }
    }

    #[test]
    fn perfect_case() {
        let s = fact_scores(&ann(5, 0, 0, 0, 5)).unwrap();
        assert_eq!((s.factual_precision, s.factual_recall, s.factual_f1), (1.0, 1.0, 1.0));
        assert_eq!((s.hallucination_rate, s.omission_rate), (0.0, 0.0));
    }

    #[test]
    fn mixed_case() {
        let s = fact_scores(&ann(3, 1, 1, 2, 6)).unwrap();
        assert_eq!(s.system_facts, 5);
        assert_eq!(s.factual_precision, 0.6);
        assert_eq!(s.factual_recall, 0.5);
        assert!((s.factual_f1 - 6.0 / 11.0).abs() < 1e-15);
        assert_eq!(s.hallucination_rate, 0.2);
        assert_eq!(s.omission_rate, 2.0 / 6.0);
    }

    #[test]
    fn zero_system_facts_undefined() {
        match fact_scores(&ann(0, 0, 0, 3, 3)) {
            Err(Error::UndefinedScore(msg)) => {
                assert!(msg.contains("precision"));
                assert!(msg.contains("hallucination"));
            }
            other => panic!("unexpected {other:?}"),
        }
        // per-criterion access still gives the defined ones
        let a = ann(0, 0, 0, 3, 3);
        assert_eq!(Criterion::FactualR.from_facts(&a), Some(0.0));
        assert_eq!(Criterion::OmissionRate.from_facts(&a), Some(1.0));
        assert_eq!(Criterion::FactualP.from_facts(&a), None);
        assert_eq!(Criterion::FactualF1.from_facts(&a), None);
    }

    #[test]
    fn precision_plus_hallucination_at_most_one() {
        for c in 0..5 {
            for i in 0..3 {
                for h in 0..3 {
                    if c + i + h == 0 {
                        continue;
                    }
                    let s = fact_scores(&ann(c, i, h, 0, 5)).unwrap();
                    assert!(s.factual_precision + s.hallucination_rate <= 1.0 + 1e-15);
                }
            }
        }
    }

    fn pair(system: &str, reference: &str) -> SummaryPair {
        SummaryPair {
            pair_id: "p".into(),
            dataset_id: "d".into(),
            section: None,
            source: String::new(),
            reference: reference.into(),
            system: system.into(),
        }
    }

    fn kp(spans: usize, markers: usize) -> KeyPhraseAnnotation {
        KeyPhraseAnnotation {
            pair_id: "p".into(),
            annotator_id: "a".into(),
            hallucinated_spans: (0..spans)
                .map(|_| HallucinatedSpan { start: 0, end: 3, label: "x".into() })
                .collect(),
            omission_markers: (0..markers)
                .map(|i| OmissionMarker { pos: i, note: String::new() })
                .collect(),
        }
    }

    #[test]
    fn keyphrase_normalization() {
        let forty = vec!["word"; 40].join(" ");
        let s = keyphrase_scores(&kp(2, 1), &pair(&forty, "these ten words of reference text are right here ok")).unwrap();
        assert_eq!(s.hallucination_count, 0.05);
        assert_eq!(s.omission_count, 0.1);
        let none = keyphrase_scores(&kp(0, 0), &pair("a b", "c")).unwrap();
        assert_eq!((none.hallucination_count, none.omission_count), (0.0, 0.0));
        assert!(matches!(
            keyphrase_scores(&kp(0, 0), &pair("...", "c")),
            Err(Error::EmptyText(_))
        ));
    }

    #[test]
    fn error_score_weights() {
        let w = ErrorWeights::default();
        let e = |c, n, s| ErrorCounts { critical: c, non_critical: n, spelling_grammar: s };
        assert!((error_score(&e(1, 3, 0), &w) - 2.0).abs() < 1e-15);
        assert!((error_score(&e(0, 0, 12), &w) - 1.0).abs() < 1e-15);
        assert_eq!(error_score(&e(0, 0, 0), &w), 0.0);
    }

    #[test]
    fn quality_scores() {
        let w = ErrorWeights::default();
        let ten: String = (0..10).map(|i| format!("Sentence {i}. ")).collect();
        let two = ErrorCounts { critical: 2, ..Default::default() };
        assert!((quality_score(&two, &w, &ten, "One.", false).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(quality_score(&ErrorCounts::default(), &w, "A. B.", "C.", false).unwrap(), 1.0);
        let four = "A. B. C. D.";
        let five = ErrorCounts { critical: 5, ..Default::default() };
        assert_eq!(quality_score(&five, &w, four, "x.", false).unwrap(), -0.25);
        assert_eq!(quality_score(&five, &w, four, "x.", true).unwrap(), 0.0);
        assert!(quality_score(&five, &w, "", "  ", false).is_err());
    }

    #[test]
    fn aggregate_rows() {
        assert!((aggregate_score(0.59, 0.02, -0.71) - 0.4675).abs() < 1e-12);
        assert!((aggregate_score(0.53, 0.02, -0.60) - 0.41).abs() < 1e-12);
        assert!((aggregate_score(0.66, -0.10, -0.52) - 0.485).abs() < 1e-12);
        assert!(aggregate_score(0.6, 0.0, 0.0) > aggregate_score(0.5, 0.0, 0.0));
        assert!(aggregate_score(0.5, 0.1, 0.0) < aggregate_score(0.5, 0.0, 0.0));
        assert!(aggregate_score(0.5, 0.0, 0.1) < aggregate_score(0.5, 0.0, 0.0));
    }

    #[test]
    fn annotator_policies() {
        let mut a1 = ann(3, 1, 1, 2, 6);
        a1.pair_id = "p1".into();
        let mut a2 = ann(6, 0, 0, 0, 6);
        a2.pair_id = "p1".into();
        a2.annotator_id = "b".into();
        let anns = [a1, a2];

        let mean = fact_criteria_columns(&anns, AnnotatorPolicy::Mean).unwrap();
        assert_eq!(mean[1].metric_name, "factual_r");
        assert_eq!(mean[1].get("p1"), Some(0.75));
        let first = fact_criteria_columns(&anns, AnnotatorPolicy::First).unwrap();
        assert_eq!(first[1].get("p1"), Some(0.5));
        let per = fact_criteria_columns(&anns, AnnotatorPolicy::PerAnnotator).unwrap();
        assert_eq!(per[1].get("p1@b"), Some(1.0));
        assert_eq!(per[1].len(), 2);
    }

    #[test]
    fn overlap_is_a_warning() {
        let anns = [ann(4, 0, 0, 3, 6), ann(3, 0, 0, 3, 6)];
        let w = overlap_warnings(&anns);
        assert_eq!(w.len(), 1);
        assert_eq!(w["p"], vec!["a"]);
    }
}
