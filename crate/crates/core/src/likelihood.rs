//! Sequence-likelihood scores (BARTScore-style) over pluggable
//! likelihood providers: a built-in add-k n-gram model and a file of
//! precomputed token log-probabilities.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{jsonl_lines, read_to_string};
use crate::error::{Error, Result};
use crate::greedy::WeightVector;

pub const BOS: &str = "<s>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    SrcToSys,
    #[default]
    RefToSys,
    SysToRef,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::SrcToSys, Direction::RefToSys, Direction::SysToRef];

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::SrcToSys => "SRC_TO_SYS",
            Direction::RefToSys => "REF_TO_SYS",
            Direction::SysToRef => "SYS_TO_REF",
        }
    }

    /// Short label used in metric names, e.g. `ref-sys`.
    pub fn label(&self) -> &'static str {
        match self {
            Direction::SrcToSys => "src-sys",
            Direction::RefToSys => "ref-sys",
            Direction::SysToRef => "sys-ref",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SRC_TO_SYS" | "SRC_SYS" => Ok(Direction::SrcToSys),
            "REF_TO_SYS" | "REF_SYS" => Ok(Direction::RefToSys),
            "SYS_TO_REF" | "SYS_REF" => Ok(Direction::SysToRef),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

/// Per-token log-probabilities of a target sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProbs {
    pub pair_id: String,
    pub direction: Direction,
    pub target_tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

impl TokenLogProbs {
    fn validate(&self) -> Result<()> {
        if self.target_tokens.len() != self.logprobs.len() {
            return Err(Error::LengthMismatch {
                left: self.target_tokens.len(),
                right: self.logprobs.len(),
            });
        }
        if let Some(bad) = self.logprobs.iter().find(|&&x| !x.is_finite() || x > 0.0) {
            return Err(Error::Degenerate(format!(
                "log-probability {bad} for pair `{}` is not a finite value <= 0",
                self.pair_id
            )));
        }
        Ok(())
    }
}

pub trait LikelihoodProvider {
    /// Scores `target` as continuation of `conditioning`. Providers that
    /// cannot condition ignore it.
    fn score(
        &self,
        pair_id: &str,
        direction: Direction,
        target: &[String],
        conditioning: Option<&str>,
    ) -> Result<TokenLogProbs>;
}

/// Add-k smoothed n-gram model with BOS padding. Unseen tokens map to
/// `<unk>`, which is part of the predicted vocabulary.
#[derive(Debug, Clone)]
pub struct NGramLm {
    order: usize,
    k: f64,
    vocab: BTreeSet<String>,
    counts: HashMap<Vec<String>, HashMap<String, u64>>,
    context_totals: HashMap<Vec<String>, u64>,
}

pub fn train_ngram_lm(corpus: &[Vec<String>], order: usize, k: f64) -> Result<NGramLm> {
    if order < 1 {
        return Err(Error::InvalidN(order));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Degenerate(format!("smoothing k must be positive, got {k}")));
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let vocab: BTreeSet<String> = corpus.iter().flatten().cloned().collect();
    let mut lm = NGramLm {
        order,
        k,
        vocab,
        counts: HashMap::new(),
        context_totals: HashMap::new(),
    };
    for sentence in corpus {
        for i in 0..sentence.len() {
            let ctx = lm.context(sentence, i);
            *lm.counts
                .entry(ctx.clone())
                .or_default()
                .entry(sentence[i].clone())
                .or_insert(0) += 1;
            *lm.context_totals.entry(ctx).or_insert(0) += 1;
        }
    }
    Ok(lm)
}

impl NGramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Vocabulary size including `<unk>`.
    pub fn outcome_count(&self) -> usize {
        self.vocab.len() + 1
    }

    fn map_token(&self, token: &str) -> String {
        if self.vocab.contains(token) {
            token.to_string()
        } else {
            UNK.to_string()
        }
    }

    /// The `order - 1` tokens before position `i`, BOS-padded.
    fn context(&self, tokens: &[String], i: usize) -> Vec<String> {
        let width = self.order - 1;
        (0..width)
            .map(|j| {
                let back = width - j;
                if i >= back {
                    self.map_token(&tokens[i - back])
                } else {
                    BOS.to_string()
                }
            })
            .collect()
    }

    /// `p(word | history)`; only the last `order - 1` history tokens matter.
    pub fn prob(&self, history: &[String], word: &str) -> f64 {
        let mut padded: Vec<String> = history.to_vec();
        padded.push(word.to_string());
        let ctx = self.context(&padded, padded.len() - 1);
        self.prob_in_context(&ctx, &self.map_token(word))
    }

    fn prob_in_context(&self, ctx: &[String], word: &str) -> f64 {
        let c = self
            .counts
            .get(ctx)
            .and_then(|m| m.get(word))
            .copied()
            .unwrap_or(0) as f64;
        let total = self.context_totals.get(ctx).copied().unwrap_or(0) as f64;
        (c + self.k) / (total + self.k * self.outcome_count() as f64)
    }

    /// Full conditional distribution over the vocabulary plus `<unk>`.
    pub fn distribution(&self, history: &[String]) -> Vec<(String, f64)> {
        self.vocab
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(UNK))
            .map(|w| (w.to_string(), self.prob(history, w)))
            .collect()
    }

    /// Natural-log probability of each token given its predecessors.
    pub fn logprobs(&self, tokens: &[String]) -> Vec<f64> {
        (0..tokens.len())
            .map(|i| {
                let ctx = self.context(tokens, i);
                self.prob_in_context(&ctx, &self.map_token(&tokens[i])).ln()
            })
            .collect()
    }
}

impl LikelihoodProvider for NGramLm {
    fn score(
        &self,
        pair_id: &str,
        direction: Direction,
        target: &[String],
        _conditioning: Option<&str>,
    ) -> Result<TokenLogProbs> {
        if target.is_empty() {
            return Err(Error::EmptyTarget);
        }
        Ok(TokenLogProbs {
            pair_id: pair_id.to_string(),
            direction,
            target_tokens: target.to_vec(),
            logprobs: self.logprobs(target),
        })
    }
}

/// Stored log-probabilities keyed by `(pair_id, direction)`.
#[derive(Debug, Clone, Default)]
pub struct LogProbFile {
    records: HashMap<(String, Direction), TokenLogProbs>,
}

impl LogProbFile {
    pub fn insert(&mut self, record: TokenLogProbs) -> Result<()> {
        record.validate()?;
        let key = (record.pair_id.clone(), record.direction);
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateKey(format!(
                "{}/{}",
                record.pair_id, record.direction
            )));
        }
        self.records.insert(key, record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn directions(&self) -> BTreeSet<&'static str> {
        self.records.keys().map(|(_, d)| d.as_str()).collect()
    }
}

impl LikelihoodProvider for LogProbFile {
    fn score(
        &self,
        pair_id: &str,
        direction: Direction,
        _target: &[String],
        _conditioning: Option<&str>,
    ) -> Result<TokenLogProbs> {
        let record = self
            .records
            .get(&(pair_id.to_string(), direction))
            .ok_or_else(|| Error::MissingPair {
                pair_id: pair_id.to_string(),
                what: format!("{direction} log-probabilities"),
            })?;
        if record.logprobs.is_empty() {
            return Err(Error::EmptyTarget);
        }
        Ok(record.clone())
    }
}

pub fn load_logprobs(path: &Path) -> Result<LogProbFile> {
    parse_logprobs(&read_to_string(path)?)
}

pub fn parse_logprobs(text: &str) -> Result<LogProbFile> {
    let mut file = LogProbFile::default();
    for (line, content) in jsonl_lines(text) {
        let record: TokenLogProbs =
            serde_json::from_str(content).map_err(|e| Error::parse(line, e.to_string()))?;
        file.insert(record)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(file)
}

pub fn write_logprobs<'a>(records: impl IntoIterator<Item = &'a TokenLogProbs>) -> String {
    records
        .into_iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

/// Length-normalized mean log-probability.
pub fn bartscore(lp: &TokenLogProbs) -> Result<f64> {
    if lp.logprobs.is_empty() {
        return Err(Error::EmptyTarget);
    }
    Ok(lp.logprobs.iter().sum::<f64>() / lp.logprobs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodNormalization {
    /// Weighted mean: `Σ w·lp / Σ w`.
    #[default]
    WeightSum,
    /// Plain weighted sum; grows in magnitude with length.
    RawSum,
}

impl std::str::FromStr for LikelihoodNormalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weight-sum" => Ok(LikelihoodNormalization::WeightSum),
            "raw-sum" => Ok(LikelihoodNormalization::RawSum),
            other => Err(format!("unknown normalization `{other}`")),
        }
    }
}

pub fn med_bartscore(
    lp: &TokenLogProbs,
    weights: &WeightVector,
    normalize: LikelihoodNormalization,
) -> Result<f64> {
    if lp.logprobs.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if weights.len() != lp.logprobs.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: lp.logprobs.len(),
        });
    }
    let raw: f64 = lp
        .logprobs
        .iter()
        .zip(&weights.weights)
        .map(|(l, w)| w * l)
        .sum();
    Ok(match normalize {
        LikelihoodNormalization::RawSum => raw,
        LikelihoodNormalization::WeightSum => raw / weights.sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn sent(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn lp(values: &[f64]) -> TokenLogProbs {
        TokenLogProbs {
            pair_id: "p".into(),
            direction: Direction::RefToSys,
            target_tokens: (0..values.len()).map(|i| format!("t{i}")).collect(),
            logprobs: values.to_vec(),
        }
    }

    #[test]
    fn bigram_hand_count() {
        let lm = train_ngram_lm(&[sent("a b"), sent("a b")], 2, 1.0).unwrap();
        assert_eq!(lm.outcome_count(), 3);
        assert!((lm.prob(&sent("a"), "b") - 0.6).abs() < 1e-15);
        // p(a | <s>) = (2+1)/(2+3)
        assert!((lm.prob(&[], "a") - 0.6).abs() < 1e-15);
    }

    #[test]
    fn unigram_uniform_counts() {
        let lm = train_ngram_lm(&[sent("x y z"), sent("z y x")], 1, 1.0).unwrap();
        let px = lm.prob(&[], "x");
        assert_eq!(px, lm.prob(&[], "y"));
        assert_eq!(px, lm.prob(&[], "z"));
        // (2 + 1) / (6 + 1 * 4)
        assert!((px - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unseen_history_is_uniform_over_vocab_and_unk() {
        // V = 4 words; history "d" never precedes anything.
        let lm = train_ngram_lm(&[sent("a b c d")], 2, 1.0).unwrap();
        let v = lm.outcome_count() as f64;
        assert_eq!(v, 5.0);
        let lps = lm.logprobs(&sent("d a"));
        assert!((lps[1] - (1.0 / v).ln()).abs() < 1e-15);
        let unseen = lm.logprobs(&sent("q a"));
        assert!((unseen[1] - (1.0 / v).ln()).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_on_toy_corpus() {
        let corpus = [sent("the patient is well"), sent("the patient has pain"), sent("pain is mild")];
        let lm = train_ngram_lm(&corpus, 2, 0.5).unwrap();
        // vocab {the, patient, is, well, has, pain, mild} + unk = 8 outcomes
        assert_eq!(lm.outcome_count(), 8);
        // "the patient is mild":
        //   the|<s>     : c=2, ctx=3  -> (2+.5)/(3+4)
        //   patient|the : c=2, ctx=2  -> (2+.5)/(2+4)
        //   is|patient  : c=1, ctx=2  -> (1+.5)/(2+4)
        //   mild|is     : c=1, ctx=2  -> (1+.5)/(2+4)
        let expected = (2.5f64 / 7.0).ln() + (2.5f64 / 6.0).ln() + (1.5f64 / 6.0).ln() + (1.5f64 / 6.0).ln();
        let total: f64 = lm.logprobs(&sent("the patient is mild")).iter().sum();
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn distributions_sum_to_one() {
        let mut rng = StdRng::seed_from_u64(7);
        let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let corpus: Vec<Vec<String>> = (0..30)
            .map(|_| (0..rng.gen_range(1..10)).map(|_| words[rng.gen_range(0..12)].clone()).collect())
            .collect();
        for order in 1..=3 {
            let lm = train_ngram_lm(&corpus, order, 0.3).unwrap();
            for _ in 0..100 {
                let history: Vec<String> = (0..rng.gen_range(0..4))
                    .map(|_| {
                        if rng.gen_bool(0.1) { "oov".to_string() } else { words[rng.gen_range(0..12)].clone() }
                    })
                    .collect();
                let total: f64 = lm.distribution(&history).iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn larger_k_flattens() {
        let corpus = [sent("a a a b"), sent("a c a a"), sent("b a")];
        let kl = |k: f64| {
            let lm = train_ngram_lm(&corpus, 1, k).unwrap();
            let v = lm.outcome_count() as f64;
            lm.distribution(&[]).iter().map(|(_, p)| p * (p * v).ln()).sum::<f64>()
        };
        let ks = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0];
        for pair in ks.windows(2) {
            assert!(kl(pair[0]) >= kl(pair[1]));
        }
    }

    #[test]
    fn train_errors() {
        assert!(matches!(train_ngram_lm(&[], 2, 1.0), Err(Error::EmptyCorpus)));
        assert!(matches!(train_ngram_lm(&[vec![]], 2, 1.0), Err(Error::EmptyCorpus)));
        assert!(matches!(train_ngram_lm(&[sent("a")], 0, 1.0), Err(Error::InvalidN(0))));
        assert!(train_ngram_lm(&[sent("a")], 1, 0.0).is_err());
    }

    #[test]
    fn ngram_provider_ignores_conditioning() {
        let lm = train_ngram_lm(&[sent("a b c")], 2, 1.0).unwrap();
        let target = sent("a c");
        let with = lm.score("p", Direction::SrcToSys, &target, Some("context")).unwrap();
        let without = lm.score("p", Direction::SrcToSys, &target, None).unwrap();
        assert_eq!(with, without);
        assert!(matches!(lm.score("p", Direction::SrcToSys, &[], None), Err(Error::EmptyTarget)));
    }

    #[test]
    fn file_provider_round_trip() {
        let text = r#"{"pair_id":"p1","direction":"REF_TO_SYS","target_tokens":["a","b"],"logprobs":[-0.5,-2.25]}
{"pair_id":"p1","direction":"SYS_TO_REF","target_tokens":["c"],"logprobs":[0]}
"#;
        let file = parse_logprobs(text).unwrap();
        assert_eq!(file.len(), 2);
        let rec = file.score("p1", Direction::RefToSys, &[], None).unwrap();
        assert_eq!(rec.target_tokens, vec!["a", "b"]);
        assert_eq!(rec.logprobs, vec![-0.5, -2.25]);
        assert!(matches!(
            file.score("p1", Direction::SrcToSys, &[], None),
            Err(Error::MissingPair { .. })
        ));
        let again = parse_logprobs(&write_logprobs([&rec])).unwrap();
        assert_eq!(again.score("p1", Direction::RefToSys, &[], None).unwrap(), rec);
    }

    #[test]
    fn file_rejects_bad_records() {
        let positive = r#"{"pair_id":"p","direction":"REF_TO_SYS","target_tokens":["a"],"logprobs":[0.1]}"#;
        assert!(parse_logprobs(positive).is_err());
        let ragged = r#"{"pair_id":"p","direction":"REF_TO_SYS","target_tokens":["a","b"],"logprobs":[-1]}"#;
        assert!(parse_logprobs(ragged).is_err());
    }

    #[test]
    fn bartscore_arithmetic() {
        assert_eq!(bartscore(&lp(&[-1.0, -3.0])).unwrap(), -2.0);
        assert_eq!(bartscore(&lp(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(bartscore(&lp(&[-0.7])).unwrap(), -0.7);
        assert!(matches!(bartscore(&lp(&[])), Err(Error::EmptyTarget)));
    }

    #[test]
    fn med_bartscore_arithmetic() {
        let w = WeightVector { weights: vec![1.0, 2.0], alpha: 1.0 };
        let x = lp(&[-1.0, -1.0]);
        assert_eq!(med_bartscore(&x, &w, LikelihoodNormalization::WeightSum).unwrap(), -1.0);
        assert_eq!(med_bartscore(&x, &w, LikelihoodNormalization::RawSum).unwrap(), -3.0);
        assert!(matches!(
            med_bartscore(&x, &WeightVector::uniform(3), LikelihoodNormalization::WeightSum),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn zero_alpha_equals_bartscore() {
        let x = lp(&[-0.1, -2.7, -0.33, -1.9]);
        assert_eq!(
            med_bartscore(&x, &WeightVector::uniform(4), LikelihoodNormalization::WeightSum).unwrap(),
            bartscore(&x).unwrap()
        );
    }

    proptest! {
        #[test]
        fn upweighting_below_average_token_lowers_mean(
            values in prop::collection::vec(-10.0f64..0.0, 2..12),
            extra in 0.1f64..3.0,
        ) {
            let x = lp(&values);
            let base = WeightVector::uniform(values.len());
            let mean = med_bartscore(&x, &base, LikelihoodNormalization::WeightSum).unwrap();
            let (idx, &lowest) = values.iter().enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
            prop_assume!(lowest < mean - 1e-9);
            let mut w = base.clone();
            w.weights[idx] += extra;
            prop_assert!(med_bartscore(&x, &w, LikelihoodNormalization::WeightSum).unwrap() < mean);
        }

        #[test]
        fn raw_sum_is_weight_sum_times_total_weight(
            values in prop::collection::vec(-10.0f64..0.0, 1..12),
            alpha in 0.0f64..2.0,
        ) {
            let x = lp(&values);
            let w = WeightVector::from_mask(&(0..values.len()).map(|i| i % 2 == 1).collect::<Vec<_>>(), alpha);
            let mean = med_bartscore(&x, &w, LikelihoodNormalization::WeightSum).unwrap();
            let raw = med_bartscore(&x, &w, LikelihoodNormalization::RawSum).unwrap();
            prop_assert!(mean <= 0.0);
            prop_assert!((raw - mean * w.sum()).abs() <= 1e-12 * raw.abs().max(1.0));
        }
    }
}
