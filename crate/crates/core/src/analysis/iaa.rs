use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::data::FactAnnotation;
use crate::error::{Error, Result};

/// Cohen's kappa with each count treated as a categorical label.
/// Perfect agreement on a single label is 1.
pub fn cohen_kappa(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Degenerate("kappa over zero items".into()));
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut freq: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        freq.entry(*x).or_default().0 += 1.0;
        freq.entry(*y).or_default().1 += 1.0;
    }
    let expected: f64 = freq.values().map(|(fa, fb)| (fa / n) * (fb / n)).sum();
    if expected >= 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Micro F1 where a count difference of up to `tol` per item still
/// counts as agreement: `TP_i = min(a_i, b_i) + min(tol, |a_i - b_i|)`,
/// `f1 = 2 ΣTP / (max(Σa, ΣTP) + max(Σb, ΣTP))`. All-zero inputs give 1.
pub fn tolerant_f1(a: &[u64], b: &[u64], tol: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let tp: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x.min(y) + tol.min(x.abs_diff(y)))
        .sum();
    let (sa, sb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    let denom = sa.max(tp) + sb.max(tp);
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaScores {
    pub kappa: f64,
    /// `(tolerance, f1)` in the requested order.
    pub f1: Vec<(u64, f64)>,
    /// `None` when either vector is constant.
    pub pearson: Option<f64>,
}

pub fn iaa(a: &[u64], b: &[u64], tolerances: &[u64]) -> Result<IaaScores> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Degenerate(format!(
            "agreement needs at least 2 items, got {}",
            a.len()
        )));
    }
    let xs: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let ys: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    Ok(IaaScores {
        kappa: cohen_kappa(a, b)?,
        f1: tolerances
            .iter()
            .map(|&t| Ok((t, tolerant_f1(a, b, t)?)))
            .collect::<Result<_>>()?,
        pearson: pearson(&xs, &ys).ok(),
    })
}

/// Annotated count fields compared between annotators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IaaField {
    CritOmissions,
    Hallucinations,
    CorrectFacts,
    IncorrectFacts,
}

impl IaaField {
    pub const ALL: [IaaField; 4] = [
        IaaField::CritOmissions,
        IaaField::Hallucinations,
        IaaField::CorrectFacts,
        IaaField::IncorrectFacts,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            IaaField::CritOmissions => "crit-omissions",
            IaaField::Hallucinations => "hallucinations",
            IaaField::CorrectFacts => "correct-facts",
            IaaField::IncorrectFacts => "incorrect-facts",
        }
    }

    pub fn value(&self, a: &FactAnnotation) -> u64 {
        match self {
            IaaField::CritOmissions => a.omitted_facts,
            IaaField::Hallucinations => a.hallucinated_facts,
            IaaField::CorrectFacts => a.correct_facts,
            IaaField::IncorrectFacts => a.incorrect_facts,
        }
    }
}

/// Mean of pairwise agreement over annotator pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaRow {
    pub field: IaaField,
    pub kappa: f64,
    pub f1: Vec<(u64, f64)>,
    /// Mean over annotator pairs where Pearson is defined.
    pub pearson: Option<f64>,
    pub annotator_pairs: usize,
}

/// Every pair of annotators sharing at least two items contributes one
/// value per cell.
pub fn average_pairwise_iaa(annotations: &[FactAnnotation], tolerances: &[u64]) -> Result<Vec<IaaRow>> {
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, &FactAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_annotator
            .entry(a.annotator_id.as_str())
            .or_default()
            .insert(a.pair_id.as_str(), a);
    }
    let annotators: Vec<&str> = by_annotator.keys().copied().collect();
    if annotators.len() < 2 {
        return Err(Error::InsufficientAnnotators(format!(
            "found {} annotator(s), need at least 2",
            annotators.len()
        )));
    }

    let mut pairs: Vec<Vec<(&FactAnnotation, &FactAnnotation)>> = Vec::new();
    for (i, x) in annotators.iter().enumerate() {
        for y in &annotators[i + 1..] {
            let (ax, ay) = (&by_annotator[x], &by_annotator[y]);
            let shared: BTreeSet<&str> = ax.keys().filter(|k| ay.contains_key(*k)).copied().collect();
            if shared.len() >= 2 {
                pairs.push(shared.iter().map(|k| (ax[k], ay[k])).collect());
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientAnnotators(
            "no two annotators share at least 2 items".into(),
        ));
    }

    IaaField::ALL
        .iter()
        .map(|field| {
            let scores: Vec<IaaScores> = pairs
                .iter()
                .map(|items| {
                    let a: Vec<u64> = items.iter().map(|(x, _)| field.value(x)).collect();
                    let b: Vec<u64> = items.iter().map(|(_, y)| field.value(y)).collect();
                    iaa(&a, &b, tolerances)
                })
                .collect::<Result<_>>()?;
            let n = scores.len() as f64;
            let defined: Vec<f64> = scores.iter().filter_map(|s| s.pearson).collect();
            Ok(IaaRow {
                field: *field,
                kappa: scores.iter().map(|s| s.kappa).sum::<f64>() / n,
                f1: tolerances
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| (t, scores.iter().map(|s| s.f1[i].1).sum::<f64>() / n))
                    .collect(),
                pearson: (!defined.is_empty())
                    .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
                annotator_pairs: scores.len(),
            })
        })
        .collect()
}

/// Column header for a tolerance: `f1` for 0, `f1(tol=t)` otherwise.
pub fn f1_header(tol: u64) -> String {
    if tol == 0 {
        "f1".to_string()
    } else {
        format!("f1(tol={tol})")
    }
}
