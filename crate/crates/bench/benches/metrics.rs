use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noteval_core::analysis::pearson;
use noteval_core::concepts::{link_concepts, ConceptLexicon};
use noteval_core::greedy::{greedy_prf, WeightNormalization, WeightVector};
use noteval_core::lexical::{rouge_l, rouge_n};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn tokens(rng: &mut StdRng, n: usize, vocab: usize) -> Vec<String> {
    (0..n).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
}

fn lexical(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(1);
    let mut group = c.benchmark_group("lexical");
    for n in [100, 500, 2000] {
        let sys = tokens(&mut rng, n, 300);
        let reference = tokens(&mut rng, n, 300);
        group.bench_with_input(BenchmarkId::new("rouge_l", n), &n, |b, _| {
            b.iter(|| rouge_l(black_box(&sys), black_box(&reference)))
        });
        group.bench_with_input(BenchmarkId::new("rouge_2", n), &n, |b, _| {
            b.iter(|| rouge_n(black_box(&sys), black_box(&reference), 2).unwrap())
        });
    }
    group.finish();
}

fn greedy(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(2);
    let mut group = c.benchmark_group("greedy_prf");
    for n in [64, 256, 512] {
        let matrix = |rng: &mut StdRng| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..768).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect()
        };
        let (sys, reference) = (matrix(&mut rng), matrix(&mut rng));
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
        let w = WeightVector::from_mask(&mask, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| greedy_prf(black_box(&sys), black_box(&reference), &w, &w, WeightNormalization::WeightSum).unwrap())
        });
    }
    group.finish();
}

fn concepts(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(3);
    let mut lexicon = ConceptLexicon::new();
    for i in 0..5000 {
        let surface = if i % 3 == 0 {
            format!("w{} w{}", i % 300, (i * 7) % 300)
        } else {
            format!("w{}", i % 300)
        };
        let _ = lexicon.insert(&surface, &format!("C{i:05}"));
    }
    let doc = tokens(&mut rng, 1000, 400);
    c.bench_function("link_concepts/1000", |b| b.iter(|| link_concepts(black_box(&doc), &lexicon)));
}

fn correlation(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(4);
    let x: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
    let y: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
    c.bench_function("pearson/10000", |b| b.iter(|| pearson(black_box(&x), black_box(&y)).unwrap()));
}

criterion_group!(benches, lexical, greedy, concepts, correlation);
criterion_main!(benches);
