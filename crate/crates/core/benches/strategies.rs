//! Recompute vs precompute-and-truncate, and parallel vs sequential
//! evaluation of the precompute strategy.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use skthermo::bench::random_image;
use skthermo::engine::{enhance, EnhanceConfig, Strategy, THERMO_PRESET};
use skthermo::kernel::{KernelFamily, QuadratureSpec};

fn strategies(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let img = random_image(20, 20, 0).unwrap();
    let family = KernelFamily::Jackson { k: 2, alpha: 1.0 };
    let mut group = c.benchmark_group("strategy/20x20/jackson2");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for w in [10.0, 30.0, 60.0] {
        for strategy in [Strategy::Recompute, Strategy::PrecomputeTruncate] {
            let mut cfg = EnhanceConfig::from_family(family, w, 2.0, &quad).unwrap().with_strategy(strategy);
            cfg.parallel = false;
            group.bench_with_input(BenchmarkId::new(strategy.to_string(), w), &cfg, |b, cfg| {
                b.iter(|| enhance(black_box(&img), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn threading(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let img = random_image(160, 120, 1).unwrap();
    let preset = EnhanceConfig::preset(THERMO_PRESET, &quad).unwrap();
    let mut group = c.benchmark_group("threads/160x120/paper-thermo");
    group.sample_size(10);
    for parallel in [false, true] {
        let cfg = EnhanceConfig { parallel, ..preset.clone() };
        let name = if parallel { "parallel" } else { "sequential" };
        group.bench_function(name, |b| b.iter(|| enhance(black_box(&img), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, strategies, threading);
criterion_main!(benches);
