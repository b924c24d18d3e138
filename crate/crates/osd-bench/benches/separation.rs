//! The exponential-versus-polynomial separation, measured.
//!
//! The splitting-rule baseline doubles its work per level of the σ family
//! while the typed and compressed deciders stay polynomial; the two groups
//! use different `n` ranges so the suite still finishes quickly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use osd_bench::small_corpus;
use osd_core::asym::asym_unify;
use osd_core::compressed::decide;
use osd_core::generate::{sigma, sigma_prime};
use osd_core::hom::{decide_hom, typecheck};
use osd_core::ta::ta_unify;

fn bench_sigma(c: &mut Criterion) {
    let mut group = c.benchmark_group("sigma");
    group.sample_size(10);
    for n in [0u32, 2, 4, 6] {
        let sys = sigma(n);
        group.bench_with_input(BenchmarkId::new("ta", n), &sys, |b, sys| {
            b.iter(|| ta_unify(sys, 10_000_000))
        });
    }
    for n in [0u32, 4, 8, 12, 14] {
        let sys = sigma(n);
        group.bench_with_input(BenchmarkId::new("slp", n), &sys, |b, sys| {
            b.iter(|| decide(sys))
        });
        let typed = typecheck(&sys).expect("sigma is in the typed fragment");
        group.bench_with_input(BenchmarkId::new("hom", n), &typed, |b, typed| {
            b.iter(|| decide_hom(typed))
        });
    }
    group.finish();
}

fn bench_sigma_prime(c: &mut Criterion) {
    let mut group = c.benchmark_group("sigma-prime");
    group.sample_size(10);
    for n in [0u32, 2, 4] {
        let sys = sigma_prime(n);
        group.bench_with_input(BenchmarkId::new("asym", n), &sys, |b, sys| {
            b.iter(|| asym_unify(sys, 10_000_000))
        });
    }
    group.finish();
}

fn bench_random_corpus(c: &mut Criterion) {
    let corpus = small_corpus(64);
    let mut group = c.benchmark_group("random-corpus-64");
    group.sample_size(10);
    group.bench_function("ta", |b| {
        b.iter(|| corpus.iter().filter(|s| ta_unify(s, 1_000_000).is_unifiable()).count())
    });
    group.bench_function("slp", |b| {
        b.iter(|| corpus.iter().filter(|s| decide(s).is_unifiable()).count())
    });
    group.finish();
}

criterion_group!(benches, bench_sigma, bench_sigma_prime, bench_random_corpus);
criterion_main!(benches);
