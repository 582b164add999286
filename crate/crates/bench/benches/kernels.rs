use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use spreadlab::certify::{certify_two_to_four, certify_well_spread};
use spreadlab::lowdeg::{lowdeg_norm, LowDegMethod, LowDegParams};
use spreadlab::noise::{kl_shift, SymGeomParams};
use spreadlab::numerics::leverage_scores;
use spreadlab::spark::compute_spark;
use spreadlab::spreadness::{spread_witness_search, subspace_spread_exact, SpreadSpec, DEFAULT_ENUMERATION_CAP};
use spreadlab_bench::{gaussian_basis, gaussian_design, sign_matrix};

fn numerics(c: &mut Criterion) {
    let a = gaussian_design(4096, 16);
    c.bench_function("leverage_scores 4096x16", |b| b.iter(|| leverage_scores(black_box(&a)).unwrap()));
}

fn certify(c: &mut Criterion) {
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    let small = gaussian_design(1024, 8);
    g.bench_function("two_to_four 1024x8", |b| b.iter(|| certify_two_to_four(black_box(&small)).unwrap()));
    let large = gaussian_design(4096, 16);
    g.bench_function("well_spread 4096x16", |b| b.iter(|| certify_well_spread(black_box(&large), 0.9, 2.0).unwrap()));
    g.finish();
}

fn spreadness(c: &mut Criterion) {
    let basis = gaussian_basis(12, 3);
    let spec = SpreadSpec::l2(3, 0.5);
    c.bench_function("spread exact 12x3 m=3", |b| {
        b.iter(|| subspace_spread_exact(black_box(&basis), spec, DEFAULT_ENUMERATION_CAP).unwrap())
    });
    let big = gaussian_basis(1024, 64);
    let mut g = c.benchmark_group("spread heuristic");
    g.sample_size(10);
    g.bench_function("1024x64 m=31", |b| {
        b.iter(|| spread_witness_search(black_box(&big), SpreadSpec::l2(31, 0.8), 10, 0, &[]).unwrap())
    });
    g.finish();
}

fn noise(c: &mut Criterion) {
    let p = SymGeomParams::new(0, 2e-6, 0.1, 1.0).unwrap();
    c.bench_function("kl_shift tiny lambda", |b| b.iter(|| kl_shift(black_box(&p), 3).unwrap()));
}

fn lowdeg(c: &mut Criterion) {
    let params = LowDegParams { n: 10_000, d: 7_196_192, rho: 0.1, sigma: 0.0768, degree: 84 };
    c.bench_function("lowdeg exact D=84", |b| b.iter(|| lowdeg_norm(black_box(&params), LowDegMethod::ExactDp).unwrap()));
}

fn spark(c: &mut Criterion) {
    let a = sign_matrix();
    c.bench_function("spark 4x8", |b| b.iter(|| compute_spark(black_box(&a), 22).unwrap()));
}

criterion_group!(benches, numerics, certify, spreadness, noise, lowdeg, spark);
criterion_main!(benches);
