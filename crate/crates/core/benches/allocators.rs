//! Parallel sections on the default pool against a single-thread pool.
//!
//! Built with `--no-default-features` both sides run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;
use std::hint::black_box;

use coregauge::analysis::{lipschitz_scan, AllocatorKind, DeltaRule};
use coregauge::instances::gen_random;
use coregauge::matching::integrate_matching;
use coregauge::mst::integrate_mst;
use coregauge::oracles::char_table;
use coregauge::rounding::Base;
use coregauge::shapley::{shapley_exact, shapley_sample};
use coregauge::{GameInstance, GameKind};

fn pools() -> [(&'static str, Option<ThreadPool>); 2] {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    [("sequential", Some(one)), ("parallel", None)]
}

fn on<R: Send>(pool: &Option<ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn bench_each(c: &mut Criterion, group: &str, cases: &[(usize, GameInstance)], f: impl Fn(&GameInstance) + Sync) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for (name, pool) in pools() {
        for (n, inst) in cases {
            g.bench_with_input(BenchmarkId::new(name, n), inst, |b, inst| b.iter(|| on(&pool, || f(black_box(inst)))));
        }
    }
    g.finish();
}

fn instances(kind: GameKind, sizes: &[usize]) -> Vec<(usize, GameInstance)> {
    sizes.iter().map(|&n| (n, gen_random(kind, n, 0.5, 10.0, n as u64).unwrap())).collect()
}

fn benches(c: &mut Criterion) {
    let matching = instances(GameKind::Matching, &[10, 14]);
    let mst = instances(GameKind::MinSpanningTree, &[10, 14]);
    let alpha = Base::new(1.5).unwrap();

    bench_each(c, "char_table", &matching, |i| {
        char_table(i).unwrap();
    });
    bench_each(c, "integrate_matching", &matching[..1], |i| {
        integrate_matching(i, alpha).unwrap();
    });
    bench_each(c, "integrate_mst", &mst, |i| {
        integrate_mst(i).unwrap();
    });
    bench_each(c, "shapley_exact", &mst, |i| {
        shapley_exact(i).unwrap();
    });
    bench_each(c, "shapley_sample", &mst[1..], |i| {
        shapley_sample(i, 20_000, 1).unwrap();
    });
    bench_each(c, "lipschitz_scan", &instances(GameKind::MinSpanningTree, &[8]), |i| {
        lipschitz_scan(AllocatorKind::Theorem2, i, &DeltaRule::Grid { levels: 2 }, f64::INFINITY, 0.0).unwrap();
    });
}

criterion_group!(allocators, benches);
criterion_main!(allocators);
