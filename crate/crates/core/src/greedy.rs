//! Greedy token matching over embeddings (BERTScore-style) with optional
//! per-token weights for medical terms.

use serde::{Deserialize, Serialize};

use crate::concepts::{link_concepts, ConceptLexicon};
use crate::embeddings::{cosine, embed_document, DocEmbedding, SegmentEncoder, Side};
use crate::error::{Error, Result};
use crate::prf::Prf;
use crate::text::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightNormalization {
    /// Divide by the sum of weights; scores stay within [-1, 1].
    #[default]
    WeightSum,
    /// Divide by the token count. Exceeds 1 for alpha > 0 and good matches.
    TokenCount,
}

impl std::str::FromStr for WeightNormalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weight-sum" => Ok(WeightNormalization::WeightSum),
            "token-count" => Ok(WeightNormalization::TokenCount),
            other => Err(format!("unknown normalization `{other}`")),
        }
    }
}

/// One weight per token: 1 for ordinary tokens, `1 + alpha` for medical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector {
            weights: vec![1.0; n],
            alpha: 0.0,
        }
    }

    pub fn from_mask(medical: &[bool], alpha: f64) -> Self {
        WeightVector {
            weights: medical
                .iter()
                .map(|&m| if m { 1.0 + alpha } else { 1.0 })
                .collect(),
            alpha,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Tokens inside a linked concept span get weight `1 + alpha`.
pub fn medical_weights<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &ConceptLexicon,
    alpha: f64,
) -> WeightVector {
    let mask = link_concepts(tokens, lexicon).covered(tokens.len());
    WeightVector::from_mask(&mask, alpha)
}

/// Weighted mean over `from` rows of the best cosine against `to` rows.
fn directional(
    from: &[Vec<f64>],
    to: &[Vec<f64>],
    weights: &WeightVector,
    normalize: WeightNormalization,
) -> Result<f64> {
    let mut total = 0.0;
    for (row, w) in from.iter().zip(&weights.weights) {
        let mut best = f64::NEG_INFINITY;
        for other in to {
            best = best.max(cosine(row, other)?);
        }
        total += w * best;
    }
    let z = match normalize {
        WeightNormalization::WeightSum => weights.sum(),
        WeightNormalization::TokenCount => from.len() as f64,
    };
    Ok(total / z)
}

/// Precision matches each system row to its best reference row; recall
/// does the reverse. F1 is the harmonic mean of the raw values.
pub fn greedy_prf(
    sys: &[Vec<f64>],
    reference: &[Vec<f64>],
    w_sys: &WeightVector,
    w_ref: &WeightVector,
    normalize: WeightNormalization,
) -> Result<Prf> {
    if sys.is_empty() || reference.is_empty() {
        return Err(Error::EmptyDocument);
    }
    if w_sys.len() != sys.len() {
        return Err(Error::LengthMismatch {
            left: w_sys.len(),
            right: sys.len(),
        });
    }
    if w_ref.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: w_ref.len(),
            right: reference.len(),
        });
    }
    let p = directional(sys, reference, w_sys, normalize)?;
    let r = directional(reference, sys, w_ref, normalize)?;
    Ok(Prf::new(p, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub alpha: f64,
    pub normalize: WeightNormalization,
    pub window: Window,
    /// Embed long documents window by window (the `-SP` variant). When
    /// false both sides are truncated to `window.max_len()` tokens.
    pub sliding: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            alpha: 1.0,
            normalize: WeightNormalization::WeightSum,
            window: Window::default(),
            sliding: true,
        }
    }
}

impl GreedyConfig {
    /// Unweighted matching with the same windowing, i.e. plain BERTScore.
    pub fn unweighted(self) -> Self {
        GreedyConfig { alpha: 0.0, ..self }
    }
}

/// Embeds one side with a segment encoder, truncating or windowing per
/// the config.
pub fn embed_side(
    pair_id: &str,
    side: Side,
    tokens: &[String],
    encoder: &dyn SegmentEncoder,
    config: &GreedyConfig,
) -> Result<DocEmbedding> {
    if config.sliding {
        embed_document(pair_id, side, tokens, encoder, config.window)
    } else {
        let n = tokens.len().min(config.window.max_len());
        embed_document(pair_id, side, &tokens[..n], encoder, config.window)
    }
}

/// Scores two already-embedded documents. Without sliding, rows beyond
/// `max_len` are dropped first. Weights come from the lexicon when one is
/// given and alpha is non-zero.
pub fn weighted_greedy(
    sys: &DocEmbedding,
    reference: &DocEmbedding,
    lexicon: Option<&ConceptLexicon>,
    config: &GreedyConfig,
) -> Result<Prf> {
    let limit = |d: &DocEmbedding| {
        if config.sliding {
            d.clone()
        } else {
            d.truncated(config.window.max_len())
        }
    };
    let (sys, reference) = (limit(sys), limit(reference));
    let weights = |d: &DocEmbedding| match lexicon {
        Some(lex) if config.alpha != 0.0 => medical_weights(&d.tokens, lex, config.alpha),
        _ => WeightVector::uniform(d.len()),
    };
    greedy_prf(
        &sys.matrix,
        &reference.matrix,
        &weights(&sys),
        &weights(&reference),
        config.normalize,
    )
}

/// Tokens → embeddings → medical weights → greedy matching.
pub fn med_bertscore(
    pair_id: &str,
    sys_tokens: &[String],
    ref_tokens: &[String],
    encoder: &dyn SegmentEncoder,
    lexicon: Option<&ConceptLexicon>,
    config: &GreedyConfig,
) -> Result<Prf> {
    let sys = embed_side(pair_id, Side::System, sys_tokens, encoder, config)?;
    let reference = embed_side(pair_id, Side::Reference, ref_tokens, encoder, config)?;
    weighted_greedy(&sys, &reference, lexicon, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{EmbeddingKind, EmbeddingStore, StaticEncoder};
    use proptest::prelude::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_matrices_score_one() {
        let m = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.1, 0.1]];
        let w = WeightVector::from_mask(&[true, false, true], 2.5);
        let p = greedy_prf(&m, &m, &w, &w, WeightNormalization::WeightSum).unwrap();
        assert!((p.precision - 1.0).abs() < 1e-15);
        assert!((p.recall - 1.0).abs() < 1e-15);
        assert!((p.f1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_token_hand_case() {
        let sys = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let reference = vec![vec![1.0, 0.0]];
        let p = greedy_prf(
            &sys,
            &reference,
            &WeightVector::uniform(2),
            &WeightVector::uniform(1),
            WeightNormalization::WeightSum,
        )
        .unwrap();
        assert_eq!(p.precision, 0.5);
        assert_eq!(p.recall, 1.0);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let m = vec![vec![1.0]];
        let w = WeightVector::uniform(1);
        assert!(matches!(
            greedy_prf(&[], &m, &WeightVector::uniform(0), &w, WeightNormalization::WeightSum),
            Err(Error::EmptyDocument)
        ));
        assert!(matches!(
            greedy_prf(&m, &m, &WeightVector::uniform(2), &w, WeightNormalization::WeightSum),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn medical_weight_patterns() {
        let mut lex = ConceptLexicon::new();
        lex.insert("chest pain", "C01").unwrap();
        let toks = ["patient", "denies", "chest", "pain"];
        assert_eq!(medical_weights(&toks, &lex, 1.0).weights, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(
            medical_weights(&toks, &ConceptLexicon::new(), 1.0).weights,
            vec![1.0; 4]
        );
        let mut lex2 = ConceptLexicon::new();
        lex2.insert("denies", "C09").unwrap();
        assert_eq!(
            medical_weights(&toks, &lex2, 0.5).weights,
            vec![1.0, 1.5, 1.0, 1.0]
        );
    }

    fn vocab_store(n: usize) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(n, EmbeddingKind::Token);
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            s.insert(format!("t{i}"), v).unwrap();
        }
        s
    }

    #[test]
    fn short_pairs_plain_equals_sliding() {
        let store = vocab_store(8);
        let enc = StaticEncoder::new(&store);
        let sys = strings(&["t1", "t2", "t3"]);
        let reference = strings(&["t2", "t3", "t4", "t5"]);
        let sp = GreedyConfig::default();
        let plain = GreedyConfig { sliding: false, ..sp };
        assert_eq!(
            med_bertscore("p", &sys, &reference, &enc, None, &sp).unwrap(),
            med_bertscore("p", &sys, &reference, &enc, None, &plain).unwrap()
        );
    }

    #[test]
    fn long_identical_docs_score_one() {
        let store = vocab_store(8);
        let enc = StaticEncoder::new(&store);
        let doc: Vec<String> = (0..700).map(|i| format!("t{}", i % 8)).collect();
        for sliding in [true, false] {
            let cfg = GreedyConfig { sliding, ..Default::default() };
            let p = med_bertscore("p", &doc, &doc, &enc, None, &cfg).unwrap();
            assert_eq!(p, Prf::new(1.0, 1.0));
        }
    }

    #[test]
    fn long_system_against_its_truncation() {
        // The suffix (positions >= 512) uses vocabulary absent from the prefix.
        let store = vocab_store(8);
        let enc = StaticEncoder::new(&store);
        let sys: Vec<String> = (0..700)
            .map(|i| if i < 512 { format!("t{}", i % 4) } else { format!("t{}", 4 + i % 4) })
            .collect();
        let reference = sys[..512].to_vec();
        let cfg = GreedyConfig { alpha: 0.0, ..Default::default() };
        let p = med_bertscore("p", &sys, &reference, &enc, None, &cfg).unwrap();
        assert_eq!(p.recall, 1.0);
        // 188 suffix tokens match nothing (cosine 0)
        assert!((p.precision - 512.0 / 700.0).abs() < 1e-12);

        // If the suffix reuses prefix vocabulary, precision is 1 as well.
        let sys2: Vec<String> = (0..700).map(|i| format!("t{}", i % 4)).collect();
        let p2 = med_bertscore("p", &sys2, &sys2[..512], &enc, None, &cfg).unwrap();
        assert_eq!(p2, Prf::new(1.0, 1.0));
    }

    fn arb_matrix(max_rows: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(
            prop::collection::vec(0.1f64..1.0, 3).prop_map(|v| v),
            1..=max_rows,
        )
    }

    proptest! {
        #[test]
        fn swap_symmetry(a in arb_matrix(6), b in arb_matrix(6), alpha in 0.0f64..2.0) {
            let wa = WeightVector::from_mask(&(0..a.len()).map(|i| i % 2 == 0).collect::<Vec<_>>(), alpha);
            let wb = WeightVector::from_mask(&(0..b.len()).map(|i| i % 3 == 0).collect::<Vec<_>>(), alpha);
            let ab = greedy_prf(&a, &b, &wa, &wb, WeightNormalization::WeightSum).unwrap();
            let ba = greedy_prf(&b, &a, &wb, &wa, WeightNormalization::WeightSum).unwrap();
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
        }

        #[test]
        fn nonnegative_vectors_stay_in_unit_interval(a in arb_matrix(6), b in arb_matrix(6)) {
            let wa = WeightVector::from_mask(&vec![true; a.len()], 1.0);
            let wb = WeightVector::uniform(b.len());
            let p = greedy_prf(&a, &b, &wa, &wb, WeightNormalization::WeightSum).unwrap();
            for v in [p.precision, p.recall, p.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
