//! Timing of the exponent evaluations that dominate curve generation.

use arq_exponents::deadline::{ir_bound, md_bounds, BoundOptions};
use arq_exponents::erasure_exponents::{feedback_point, threshold_exponents};
use arq_exponents::gallager::{random_coding_exponent, sphere_packing_exponent};
use arq_exponents::Channel;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn bench_exponents(c: &mut Criterion) {
    let bsc = Channel::bsc(0.15).unwrap();
    let awgn = Channel::awgn(10f64.powf(0.3)).unwrap();
    let opts = BoundOptions::default();

    c.bench_function("random_coding_bsc", |b| {
        b.iter(|| random_coding_exponent(&bsc, black_box(0.1)).unwrap().value)
    });
    c.bench_function("sphere_packing_bsc", |b| {
        b.iter(|| sphere_packing_exponent(&bsc, black_box(0.1)).unwrap().value)
    });
    c.bench_function("threshold_pair_bsc", |b| {
        b.iter(|| threshold_exponents(&bsc, black_box(0.1), black_box(0.05)).unwrap().e1)
    });
    c.bench_function("feedback_bsc", |b| {
        b.iter(|| feedback_point(&bsc, black_box(0.1)).unwrap().value)
    });
    c.bench_function("md_bounds_bsc_l4", |b| {
        b.iter(|| md_bounds(&bsc, black_box(0.1), 4, opts).unwrap().lower)
    });
    c.bench_function("ir_bound_bsc_l4", |b| {
        b.iter(|| ir_bound(&bsc, black_box(0.1), 4, opts).unwrap().value)
    });
    c.bench_function("feedback_awgn", |b| {
        b.iter(|| feedback_point(&awgn, black_box(0.3)).unwrap().value)
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_exponents
}
criterion_main!(benches);
