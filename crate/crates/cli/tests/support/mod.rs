//! Synthetic corpora and helpers for driving the `noteval` binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::Rng;

pub fn noteval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noteval"))
        .args(args)
        .output()
        .expect("noteval binary runs")
}

pub fn noteval_ok(args: &[&str]) -> Output {
    let out = noteval(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "noteval {args:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("write fixture");
    path
}

pub fn pair_line(pair_id: &str, dataset_id: &str, source: &str, reference: &str, system: &str) -> String {
    serde_json::json!({
        "pair_id": pair_id,
        "dataset_id": dataset_id,
        "source": source,
        "reference": reference,
        "system": system,
    })
    .to_string()
        + "\n"
}

pub fn fact_line(pair_id: &str, annotator: &str, counts: [u64; 5]) -> String {
    let [correct, incorrect, hallucinated, omitted, reference] = counts;
    serde_json::json!({
        "pair_id": pair_id,
        "annotator_id": annotator,
        "correct": correct,
        "incorrect": incorrect,
        "hallucinated": hallucinated,
        "omitted": omitted,
        "reference_facts": reference,
    })
    .to_string()
        + "\n"
}

/// Planted corpus: every fact is one sentence of `FACT_LEN` tokens that
/// occur nowhere else, so unigram overlap counts facts exactly.
pub struct PlantedCorpus {
    pub dataset: String,
    pub facts: String,
    pub omitted: Vec<u64>,
    pub hallucinated: Vec<u64>,
}

pub const REFERENCE_FACTS: u64 = 8;
pub const FACT_LEN: usize = 4;

fn fact_sentence(tag: &str) -> String {
    let words: Vec<String> = (0..FACT_LEN).map(|w| format!("{tag}w{w}")).collect();
    format!("{}.", words.join(" "))
}

pub fn planted_corpus(rng: &mut StdRng, pairs: usize) -> PlantedCorpus {
    let mut dataset = String::new();
    let mut facts = String::new();
    let mut omitted = Vec::new();
    let mut hallucinated = Vec::new();
    for i in 0..pairs {
        let o = rng.gen_range(0..=5u64);
        let h = rng.gen_range(0..=5u64);
        let reference: Vec<String> = (0..REFERENCE_FACTS)
            .map(|j| fact_sentence(&format!("p{i}f{j}")))
            .collect();
        let mut system: Vec<String> = reference[o as usize..].to_vec();
        system.extend((0..h).map(|j| fact_sentence(&format!("p{i}h{j}"))));
        let id = format!("pair{i:03}");
        dataset.push_str(&pair_line(
            &id,
            "planted",
            "conversation text",
            &reference.join(" "),
            &system.join(" "),
        ));
        facts.push_str(&fact_line(
            &id,
            "a1",
            [REFERENCE_FACTS - o, 0, h, o, REFERENCE_FACTS],
        ));
        omitted.push(o);
        hallucinated.push(h);
    }
    PlantedCorpus {
        dataset,
        facts,
        omitted,
        hallucinated,
    }
}

/// Random clinical-ish corpus with every input `score` can take.
pub struct ScoringInputs {
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
    pub kge: PathBuf,
    pub lexicon: PathBuf,
}

const VOCAB: usize = 60;
const CONCEPTS: usize = 12;

fn vector(rng: &mut StdRng, dim: usize) -> String {
    (0..dim)
        .map(|_| format!("{:.6}", rng.gen_range(-1.0..1.0f64)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_text(rng: &mut StdRng, words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    for k in 0..words {
        let w = if rng.gen_bool(0.15) {
            format!("med{}", rng.gen_range(0..CONCEPTS))
        } else {
            format!("tok{}", rng.gen_range(0..VOCAB))
        };
        out.push(if k % 9 == 8 { format!("{w}.") } else { w });
    }
    out.join(" ")
}

pub fn scoring_inputs(rng: &mut StdRng, dir: &Path, pairs: usize) -> ScoringInputs {
    let mut dataset = String::new();
    for i in 0..pairs {
        let long = i % 5 == 0;
        let ref_len = if long { 700 } else { rng.gen_range(20..80) };
        let sys_len = if long { 650 } else { rng.gen_range(15..80) };
        let reference = format!("med{} {}", i % CONCEPTS, random_text(rng, ref_len));
        let system = random_text(rng, sys_len);
        let source = random_text(rng, 40);
        dataset.push_str(&pair_line(&format!("n{i:02}"), "synthetic", &source, &reference, &system));
    }

    let dim = 8;
    // Two vocabulary words are left out to exercise the UNK vector.
    let mut store = format!("{} {dim}\n", VOCAB - 2 + CONCEPTS);
    for w in 2..VOCAB {
        store.push_str(&format!("tok{w} {}\n", vector(rng, dim)));
    }
    for c in 0..CONCEPTS {
        store.push_str(&format!("med{c} {}\n", vector(rng, dim)));
    }

    // One concept has no KGE vector.
    let mut kge = format!("{} 6\n", CONCEPTS - 1);
    for c in 1..CONCEPTS {
        kge.push_str(&format!("C{c:04} {}\n", vector(rng, 6)));
    }
    let mut lexicon = String::from("# surface\tconcept\n");
    for c in 0..CONCEPTS {
        lexicon.push_str(&format!("med{c}\tC{c:04}\n"));
    }

    ScoringInputs {
        dataset: write(dir, "notes.jsonl", &dataset),
        embeddings: write(dir, "tokens.vec", &store),
        kge: write(dir, "kge.vec", &kge),
        lexicon: write(dir, "lexicon.tsv", &lexicon),
    }
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
