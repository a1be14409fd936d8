use criterion::{black_box, criterion_group, criterion_main, Criterion};
use paracr_core::eds::{d_squared_residuals, flat_specialize, reduced_pair_system};
use paracr_core::expr::{parse, Sym, ZeroConfig};
use paracr_core::invariants::classify;
use paracr_core::monge::elimination_determinant;
use paracr_core::scenarios::{flat_model, jet2_transformed_coframe, FFamily};
use std::collections::BTreeSet;

fn bench_classify(c: &mut Criterion) {
    let cfg = ZeroConfig::with_seed(1);
    let quartic = paracr_core::PdeSystem::new(
        parse("p^4").unwrap(),
        parse("-2*r^2/p").unwrap(),
    );
    c.bench_function("classify flat model", |b| {
        b.iter(|| classify(black_box(&flat_model()), &cfg).unwrap())
    });
    c.bench_function("classify quartic family", |b| {
        b.iter(|| classify(black_box(&quartic), &cfg).unwrap())
    });
}

fn bench_monge_determinant(c: &mut Criterion) {
    let quintic = parse("p^5").unwrap();
    let opaque = parse("g(p)").unwrap();
    c.bench_function("elimination determinant p^5", |b| {
        b.iter(|| elimination_determinant(black_box(&quintic)))
    });
    c.bench_function("elimination determinant opaque", |b| {
        b.iter(|| elimination_determinant(black_box(&opaque)))
    });
}

fn bench_eds(c: &mut Criterion) {
    let reduced = reduced_pair_system();
    let zeroed: BTreeSet<String> = reduced.coefficient_names().iter().cloned().collect();
    let mc = flat_specialize(&reduced, &zeroed);
    c.bench_function("d-squared residuals (Maurer-Cartan)", |b| {
        b.iter(|| d_squared_residuals(black_box(&mc)))
    });
}

fn bench_pullback(c: &mut Criterion) {
    let cfg = ZeroConfig::with_seed(1);
    let f = FFamily::Opaque(Sym::new("f"));
    c.bench_function("second-jet coframe transform", |b| {
        b.iter(|| jet2_transformed_coframe(black_box(&f), &cfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_classify,
    bench_monge_determinant,
    bench_eds,
    bench_pullback
);
criterion_main!(benches);
