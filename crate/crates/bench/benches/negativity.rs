use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entconc_core::{
    block_eigenvalues, build_pt_blocks, imperfect_post_state, log_negativity, on_post_state,
    perfect_entanglement, Cooperativities, DetectorEfficiency, TruncationPolicy,
};

fn schmidt(c: &mut Criterion) {
    let coop = Cooperativities::new(10.0, 2.0).unwrap();
    let mut g = c.benchmark_group("perfect_entanglement");
    for q in [0usize, 30, 200] {
        g.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, &q| {
            b.iter(|| perfect_entanglement(black_box(&coop), q))
        });
    }
    g.finish();
}

fn eigensolve(c: &mut Criterion) {
    let policy = TruncationPolicy::default();
    let mut g = c.benchmark_group("log_negativity");
    g.sample_size(10);
    for (c1, c2, mu) in [(10.0, 2.0, 0.9), (10.0, 5.0, 0.6)] {
        let coop = Cooperativities::new(c1, c2).unwrap();
        let post =
            imperfect_post_state(&coop, DetectorEfficiency::new(mu).unwrap(), 2, &policy).unwrap();
        g.bench_function(format!("c2={c2},mu={mu}"), |b| {
            b.iter(|| log_negativity(black_box(&post.state), &policy).unwrap())
        });
    }
    let on = on_post_state(&Cooperativities::new(100.0, 10.0).unwrap(), &policy).unwrap();
    g.bench_function("on,c1=100,c2=10", |b| {
        b.iter(|| log_negativity(black_box(&on.state), &policy).unwrap())
    });
    g.finish();
}

fn single_block(c: &mut Criterion) {
    let policy = TruncationPolicy::default();
    let coop = Cooperativities::new(10.0, 5.0).unwrap();
    let post =
        imperfect_post_state(&coop, DetectorEfficiency::new(0.6).unwrap(), 2, &policy).unwrap();
    let blocks = build_pt_blocks(&post.state);
    let largest = blocks.iter().max_by_key(|b| b.dim()).unwrap();
    c.bench_function(&format!("block_eigenvalues/dim={}", largest.dim()), |b| {
        b.iter(|| block_eigenvalues(black_box(largest)).unwrap())
    });
}

criterion_group!(benches, schmidt, eigensolve, single_block);
criterion_main!(benches);
