use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use indax_bench::{cycle, digraph, path, sample_theory};
use indax_core::fuzz::fuzz_signature;
use indax_core::model::enumerate_models;
use indax_core::scott::{canonical_invariant, joint_type_partition, scott_height, scott_sentence};
use indax_core::setfam::{case2_transform, theory_to_family};
use indax_core::transforms::independent_axiomatize;

fn refinement(c: &mut Criterion) {
    let mut g = c.benchmark_group("height");
    for n in [3, 4, 5] {
        g.bench_with_input(BenchmarkId::new("path", n), &path(n), |b, m| b.iter(|| scott_height(black_box(m))));
        g.bench_with_input(BenchmarkId::new("cycle", n), &cycle(n), |b, m| b.iter(|| scott_height(black_box(m))));
    }
    g.finish();

    let reps = enumerate_models(&digraph(), 3).unwrap().representatives().to_vec();
    c.bench_function("joint partition of all digraphs up to 3", |b| {
        b.iter(|| joint_type_partition(black_box(&reps)).unwrap())
    });
    c.bench_function("canonical invariant of a 5-cycle", |b| b.iter(|| canonical_invariant(black_box(&cycle(5)))));
    c.bench_function("Scott sentence of a 4-path", |b| b.iter(|| scott_sentence(black_box(&path(4))).unwrap()));
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    for n in [2, 3] {
        g.bench_with_input(BenchmarkId::new("unary and binary", n), &n, |b, &n| {
            b.iter(|| enumerate_models(&fuzz_signature(), n).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let space = enumerate_models(&fuzz_signature(), 2).unwrap();
    let t = sample_theory();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    // a fresh space per iteration: spaces cache Scott sentences and satisfaction sets
    g.bench_function("independent axiomatization, size 2", |b| {
        b.iter(|| {
            let space = enumerate_models(&fuzz_signature(), 2).unwrap();
            independent_axiomatize(black_box(&t), &space).unwrap()
        })
    });
    let family = theory_to_family(&t, &space).unwrap();
    g.bench_function("case II on a theory's model sets", |b| b.iter(|| case2_transform(black_box(&family)).unwrap()));
    g.finish();
}

criterion_group!(benches, refinement, enumeration, pipeline);
criterion_main!(benches);
