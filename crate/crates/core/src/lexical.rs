//! ROUGE-N and ROUGE-L.
//!
//! Clipped multiset n-gram matching, no stemming or stopword removal.
//! ROUGE-L is computed on the whole text as a single sequence.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::prf::{ratio, Prf};

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn rouge_n<T: Eq + Hash>(sys: &[T], reference: &[T], n: usize) -> Result<Prf> {
    if n < 1 {
        return Err(Error::InvalidN(n));
    }
    let sys_counts = ngram_counts(sys, n);
    let ref_counts = ngram_counts(reference, n);

    let matched: usize = sys_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let sys_total = sys.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);

    Ok(Prf::new(
        ratio(matched as f64, sys_total as f64),
        ratio(matched as f64, ref_total as f64),
    ))
}

pub fn rouge_l<T: Eq>(sys: &[T], reference: &[T]) -> Prf {
    let l = lcs_len(sys, reference) as f64;
    Prf::new(
        ratio(l, sys.len() as f64),
        ratio(l, reference.len() as f64),
    )
}

/// Length of the longest common subsequence, O(|a|·|b|) time and
/// O(min(|a|,|b|)) memory.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}
