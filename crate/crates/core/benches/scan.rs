use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ks2_core::scan::{delta_table, pair_grid_scan, r_max_scan, ScanConfig};
use ks2_core::SamplePair;

fn configs() -> [(&'static str, ScanConfig); 2] {
    [("sequential", ScanConfig::sequential()), ("default", ScanConfig::default())]
}

fn scans(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    let pair = SamplePair::new(95, 190).unwrap();
    for (name, cfg) in configs() {
        g.bench_with_input(BenchmarkId::new("r_max_95_190", name), &cfg, |b, cfg| {
            b.iter(|| black_box(r_max_scan(&pair, cfg)))
        });
        g.bench_with_input(BenchmarkId::new("pair_grid_20", name), &cfg, |b, cfg| {
            b.iter(|| black_box(pair_grid_scan(20, cfg)))
        });
        g.bench_with_input(BenchmarkId::new("delta_1_200", name), &cfg, |b, cfg| {
            b.iter(|| black_box(delta_table(1, 200, cfg)))
        });
    }
    g.finish();
}

criterion_group!(benches, scans);
criterion_main!(benches);
