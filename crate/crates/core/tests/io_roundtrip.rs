use noteval_core::data::{
    parse_dataset_csv, parse_dataset_jsonl, parse_score_table, write_dataset_csv,
    write_dataset_jsonl, write_score_table, Dataset, ScoreColumn, ScoreTable, Section, SummaryPair,
};
use noteval_core::embeddings::{parse_store, write_store, EmbeddingKind, EmbeddingStore};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const PIECES: &[&str] = &[
    "Patient", "reports", "chest pain,", "\"sharp\"", "since", "Tuesday.", "BP 120/80;", "denies",
    "SOB", "\n", "naïve", "fièvre", "—", "'quoted'", "a,b", "x\"y", "🩺", "\r\n", "Dr.", "ok",
];

fn random_text(rng: &mut StdRng) -> String {
    let n = rng.gen_range(1..25);
    let mut words: Vec<&str> = (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect();
    // Leading/trailing whitespace is trimmed by no loader, but keep texts non-blank.
    words.insert(0, "Note");
    words.join(" ")
}

fn random_dataset(seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let sections = [
        None,
        Some(Section::Hpi),
        Some(Section::Exam),
        Some(Section::Results),
        Some(Section::Assessment),
    ];
    let pairs = (0..20)
        .map(|i| SummaryPair {
            pair_id: format!("note-{i:02}"),
            dataset_id: "random".into(),
            section: *sections.choose(&mut rng).unwrap(),
            source: if rng.gen_bool(0.5) { random_text(&mut rng) } else { String::new() },
            reference: random_text(&mut rng),
            system: random_text(&mut rng),
        })
        .collect();
    Dataset::new("random", pairs).unwrap()
}

#[test]
fn csv_round_trip_of_random_notes() {
    for seed in 0..5 {
        let ds = random_dataset(seed);
        let back = parse_dataset_csv(&write_dataset_csv(&ds), "other").unwrap();
        assert_eq!(back.pairs, ds.pairs);
        assert_eq!(back.dataset_id, "random");
    }
}

#[test]
fn jsonl_round_trip_of_random_notes() {
    for seed in 0..5 {
        let ds = random_dataset(seed);
        let back = parse_dataset_jsonl(&write_dataset_jsonl(&ds), "other").unwrap();
        assert_eq!(back.pairs, ds.pairs);
    }
}

#[test]
fn store_round_trip_with_1k_entries() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut store = EmbeddingStore::new(16, EmbeddingKind::Token);
    for i in 0..1000 {
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-3.0..3.0)).collect();
        store.insert(format!("tok{i}"), v).unwrap();
    }
    let back = parse_store(&write_store(&store), EmbeddingKind::Token).unwrap();
    assert_eq!(back.len(), 1000);
    assert_eq!(back.dim(), 16);
    for (k, v) in store.iter() {
        // Shortest round-trip formatting makes this bit-exact.
        assert_eq!(back.get(k).unwrap(), v);
    }
}

#[test]
fn wide_score_table_round_trip_with_gaps() {
    let ids: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
    let mut table = ScoreTable::new(ids.clone());
    let mut a = ScoreColumn::new("rouge-1-r", true);
    let mut b = ScoreColumn::new("bartscore", true);
    for (i, id) in ids.iter().enumerate() {
        a.insert(id.clone(), 0.1 * i as f64 + 1e-17).unwrap();
        if i % 2 == 0 {
            b.insert(id.clone(), -1.0 / (i as f64 + 3.0)).unwrap();
        }
    }
    table.push(a);
    table.push(b);
    let back = parse_score_table(&write_score_table(&table)).unwrap();
    assert_eq!(back.pair_ids, table.pair_ids);
    for name in ["rouge-1-r", "bartscore"] {
        assert_eq!(back.column(name).unwrap().values, table.column(name).unwrap().values);
    }
}
