use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{jsonl_lines, read_to_string, require, Dataset};
use crate::error::{Error, Result};

/// Fact-level counts from one annotator for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactAnnotation {
    pub pair_id: String,
    pub annotator_id: String,
    #[serde(rename = "correct")]
    pub correct_facts: u64,
    #[serde(rename = "incorrect")]
    pub incorrect_facts: u64,
    #[serde(rename = "hallucinated")]
    pub hallucinated_facts: u64,
    #[serde(rename = "omitted")]
    pub omitted_facts: u64,
    pub reference_facts: u64,
}

impl FactAnnotation {
    pub fn system_facts(&self) -> u64 {
        self.correct_facts + self.incorrect_facts + self.hallucinated_facts
    }

    fn validate(&self) -> Result<()> {
        if self.correct_facts > self.reference_facts {
            return Err(Error::CountInconsistent {
                pair_id: self.pair_id.clone(),
                reason: format!(
                    "correct {} exceeds reference_facts {}",
                    self.correct_facts, self.reference_facts
                ),
            });
        }
        if self.omitted_facts > self.reference_facts {
            return Err(Error::CountInconsistent {
                pair_id: self.pair_id.clone(),
                reason: format!(
                    "omitted {} exceeds reference_facts {}",
                    self.omitted_facts, self.reference_facts
                ),
            });
        }
        Ok(())
    }

    /// True when `correct + omitted > reference_facts`, which makes
    /// recall plus omission rate exceed 1. Not an error, only suspicious.
    pub fn overlapping_counts(&self) -> bool {
        self.correct_facts + self.omitted_facts > self.reference_facts
    }
}

#[derive(Deserialize)]
struct RawFact {
    pair_id: Option<String>,
    annotator_id: Option<String>,
    correct: Option<i64>,
    incorrect: Option<i64>,
    hallucinated: Option<i64>,
    omitted: Option<i64>,
    reference_facts: Option<i64>,
}

fn count(value: Option<i64>, name: &str, pair_id: &str, line: usize) -> Result<u64> {
    let v = require(value, name, line)?;
    u64::try_from(v).map_err(|_| Error::NegativeCount {
        pair_id: pair_id.to_string(),
        field: name.to_string(),
    })
}

pub fn load_fact_annotations(
    path: &Path,
    dataset: Option<&Dataset>,
) -> Result<Vec<FactAnnotation>> {
    parse_fact_annotations(&read_to_string(path)?, dataset)
}

/// Parses fact-annotation JSONL. With a dataset, unknown pair ids are
/// rejected.
pub fn parse_fact_annotations(
    text: &str,
    dataset: Option<&Dataset>,
) -> Result<Vec<FactAnnotation>> {
    let mut out: Vec<FactAnnotation> = Vec::new();
    for (line, content) in jsonl_lines(text) {
        let raw: RawFact =
            serde_json::from_str(content).map_err(|e| Error::parse(line, e.to_string()))?;
        let pair_id = require(raw.pair_id, "pair_id", line)?;
        let ann = FactAnnotation {
            annotator_id: require(raw.annotator_id, "annotator_id", line)?,
            correct_facts: count(raw.correct, "correct", &pair_id, line)?,
            incorrect_facts: count(raw.incorrect, "incorrect", &pair_id, line)?,
            hallucinated_facts: count(raw.hallucinated, "hallucinated", &pair_id, line)?,
            omitted_facts: count(raw.omitted, "omitted", &pair_id, line)?,
            reference_facts: count(raw.reference_facts, "reference_facts", &pair_id, line)?,
            pair_id,
        };
        ann.validate()?;
        if let Some(ds) = dataset {
            if !ds.contains(&ann.pair_id) {
                return Err(Error::UnknownPair(ann.pair_id));
            }
        }
        if out
            .iter()
            .any(|a| a.pair_id == ann.pair_id && a.annotator_id == ann.annotator_id)
        {
            return Err(Error::parse(
                line,
                format!(
                    "annotator `{}` annotated `{}` twice",
                    ann.annotator_id, ann.pair_id
                ),
            ));
        }
        out.push(ann);
    }
    Ok(out)
}

pub fn write_fact_annotations(annotations: &[FactAnnotation]) -> String {
    annotations
        .iter()
        .map(|a| serde_json::to_string(a).expect("annotation serializes") + "\n")
        .collect()
}

/// Character-offset span in the system text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinatedSpan {
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmissionMarker {
    pub pos: usize,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPhraseAnnotation {
    pub pair_id: String,
    pub annotator_id: String,
    #[serde(rename = "hallucinations", default)]
    pub hallucinated_spans: Vec<HallucinatedSpan>,
    #[serde(rename = "omissions", default)]
    pub omission_markers: Vec<OmissionMarker>,
}

#[derive(Deserialize)]
struct RawKeyPhrase {
    pair_id: Option<String>,
    annotator_id: Option<String>,
    #[serde(default)]
    hallucinations: Vec<HallucinatedSpan>,
    #[serde(default)]
    omissions: Vec<OmissionMarker>,
}

pub fn load_keyphrase_annotations(
    path: &Path,
    dataset: Option<&Dataset>,
) -> Result<Vec<KeyPhraseAnnotation>> {
    parse_keyphrase_annotations(&read_to_string(path)?, dataset)
}

/// Parses key-phrase JSONL. Span offsets count Unicode scalar values.
/// With a dataset, spans are checked against the system text and omission
/// positions against the reference text.
pub fn parse_keyphrase_annotations(
    text: &str,
    dataset: Option<&Dataset>,
) -> Result<Vec<KeyPhraseAnnotation>> {
    let mut out = Vec::new();
    for (line, content) in jsonl_lines(text) {
        let raw: RawKeyPhrase =
            serde_json::from_str(content).map_err(|e| Error::parse(line, e.to_string()))?;
        let ann = KeyPhraseAnnotation {
            pair_id: require(raw.pair_id, "pair_id", line)?,
            annotator_id: require(raw.annotator_id, "annotator_id", line)?,
            hallucinated_spans: raw.hallucinations,
            omission_markers: raw.omissions,
        };
        for span in &ann.hallucinated_spans {
            if span.start >= span.end {
                return Err(Error::InvalidSpan {
                    pair_id: ann.pair_id.clone(),
                    reason: format!("start {} not before end {}", span.start, span.end),
                });
            }
        }
        if let Some(ds) = dataset {
            let pair = ds
                .get(&ann.pair_id)
                .ok_or_else(|| Error::UnknownPair(ann.pair_id.clone()))?;
            let sys_len = pair.system.chars().count();
            if let Some(span) = ann.hallucinated_spans.iter().find(|s| s.end > sys_len) {
                return Err(Error::InvalidSpan {
                    pair_id: ann.pair_id.clone(),
                    reason: format!("span end {} beyond system length {}", span.end, sys_len),
                });
            }
            let ref_len = pair.reference.chars().count();
            if let Some(m) = ann.omission_markers.iter().find(|m| m.pos > ref_len) {
                return Err(Error::InvalidSpan {
                    pair_id: ann.pair_id.clone(),
                    reason: format!(
                        "omission position {} beyond reference length {}",
                        m.pos, ref_len
                    ),
                });
            }
        }
        out.push(ann);
    }
    Ok(out)
}

pub fn write_keyphrase_annotations(annotations: &[KeyPhraseAnnotation]) -> String {
    annotations
        .iter()
        .map(|a| serde_json::to_string(a).expect("annotation serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_dataset_jsonl;

    fn fact_line(correct: i64, omitted: i64, reference: i64) -> String {
        format!(
            r#"{{"pair_id":"p1","annotator_id":"a1","correct":{correct},"incorrect":1,"hallucinated":1,"omitted":{omitted},"reference_facts":{reference}}}"#
        )
    }

    #[test]
    fn accepts_consistent_record() {
        let anns = parse_fact_annotations(&fact_line(3, 2, 6), None).unwrap();
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].system_facts(), 5);
        assert!(!anns[0].overlapping_counts());
    }

    #[test]
    fn omitted_beyond_reference() {
        assert!(matches!(
            parse_fact_annotations(&fact_line(3, 7, 6), None),
            Err(Error::CountInconsistent { .. })
        ));
    }

    #[test]
    fn correct_beyond_reference() {
        assert!(matches!(
            parse_fact_annotations(&fact_line(7, 0, 6), None),
            Err(Error::CountInconsistent { .. })
        ));
    }

    #[test]
    fn negative_count() {
        assert!(matches!(
            parse_fact_annotations(&fact_line(-1, 0, 6), None),
            Err(Error::NegativeCount { field, .. }) if field == "correct"
        ));
    }

    #[test]
    fn two_annotators_same_pair() {
        let text = format!(
            "{}\n{}",
            fact_line(3, 2, 6),
            fact_line(4, 1, 6).replace("\"a1\"", "\"a2\"")
        );
        let anns = parse_fact_annotations(&text, None).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0].annotator_id, "a1");
        assert_eq!(anns[1].annotator_id, "a2");
        assert_eq!(anns[1].correct_facts, 4);
    }

    #[test]
    fn unknown_pair_with_dataset() {
        let ds = parse_dataset_jsonl(r#"{"pair_id":"other","reference":"r","system":"s"}"#, "d")
            .unwrap();
        assert!(matches!(
            parse_fact_annotations(&fact_line(3, 2, 6), Some(&ds)),
            Err(Error::UnknownPair(_))
        ));
    }

    #[test]
    fn keyphrase_spans_checked() {
        let ds = parse_dataset_jsonl(
            r#"{"pair_id":"p1","reference":"ref text","system":"héllo"}"#,
            "d",
        )
        .unwrap();
        let ok = r#"{"pair_id":"p1","annotator_id":"a","hallucinations":[{"start":0,"end":5,"label":"x"},{"start":0,"end":5,"label":"x"}],"omissions":[{"pos":8,"note":"n"}]}"#;
        let anns = parse_keyphrase_annotations(ok, Some(&ds)).unwrap();
        assert_eq!(anns[0].hallucinated_spans.len(), 2);

        let past_end = r#"{"pair_id":"p1","annotator_id":"a","hallucinations":[{"start":0,"end":6}]}"#;
        assert!(matches!(
            parse_keyphrase_annotations(past_end, Some(&ds)),
            Err(Error::InvalidSpan { .. })
        ));
        let reversed = r#"{"pair_id":"p1","annotator_id":"a","hallucinations":[{"start":3,"end":3}]}"#;
        assert!(matches!(
            parse_keyphrase_annotations(reversed, None),
            Err(Error::InvalidSpan { .. })
        ));
    }

    #[test]
    fn keyphrase_round_trip() {
        let text = r#"{"pair_id":"p1","annotator_id":"a","hallucinations":[{"start":1,"end":4,"label":"wrong"}],"omissions":[]}"#;
        let anns = parse_keyphrase_annotations(text, None).unwrap();
        let again = parse_keyphrase_annotations(&write_keyphrase_annotations(&anns), None).unwrap();
        assert_eq!(anns, again);
    }
}
