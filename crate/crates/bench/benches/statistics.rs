use criterion::{criterion_group, criterion_main, Criterion};
use rft_bench::friend_tree;
use rft_core::stats::{attach_distribution, diameter, leaf_depth, min_edge_cover};
use rft_core::{check_all, StatSnapshot, StatsConfig};

fn single_pass(c: &mut Criterion) {
    let tree = friend_tree(100_000);
    let mut group = c.benchmark_group("stats_100k");
    group.sample_size(20);
    group.bench_function("attach_distribution", |b| b.iter(|| attach_distribution(&tree)));
    group.bench_function("diameter", |b| b.iter(|| diameter(&tree)));
    group.bench_function("leaf_depth", |b| b.iter(|| leaf_depth(&tree)));
    group.bench_function("min_edge_cover", |b| b.iter(|| min_edge_cover(&tree)));
    group.bench_function("invariants", |b| b.iter(|| check_all(&tree)));
    group.finish();
}

fn snapshots(c: &mut Criterion) {
    let tree = friend_tree(100_000);
    let mut group = c.benchmark_group("snapshot_100k");
    group.sample_size(10);
    group.bench_function("census", |b| b.iter(|| StatSnapshot::compute(&tree, &StatsConfig::census_only())));
    group.bench_function("all", |b| b.iter(|| StatSnapshot::compute(&tree, &StatsConfig::default())));
    group.finish();
}

criterion_group!(benches, single_pass, snapshots);
criterion_main!(benches);
