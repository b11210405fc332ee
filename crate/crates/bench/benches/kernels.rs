use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use fkobs::exact::{PathHistogram, Tracer};
use fkobs::massive::{green_function, solve_rate, RateQuery};
use fkobs::montecarlo::{chain_rng, SpinBc, SpinConfig, SwChain};
use fkobs::{Domain, Site};

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    for (name, w, h, a, b) in [
        ("rect_2x2", 2, 2, Site::new(1, 0), Site::new(1, 2)),
        ("rect_3x2", 3, 2, Site::new(1, 0), Site::new(2, 2)),
    ] {
        let domain = Domain::rectangle(w, h, a, b).unwrap();
        let tracer = Tracer::new(&domain).unwrap();
        g.bench_function(name, |bch| {
            bch.iter(|| PathHistogram::dobrushin(&tracer, 24, black_box(&domain)).unwrap())
        });
    }
    g.finish();
}

fn green(c: &mut Criterion) {
    let mut g = c.benchmark_group("green");
    g.sample_size(10);
    for radius in [50usize, 100] {
        g.bench_function(format!("m0.5_r{radius}"), |b| {
            b.iter(|| green_function(black_box(0.5), Site::new(0, 0), radius, 1e-12).unwrap())
        });
    }
    g.finish();
}

fn rate(c: &mut Criterion) {
    let q = RateQuery::from_p(0.45, Site::new(2, 1)).unwrap();
    c.bench_function("rate_p0.45_2_1", |b| b.iter(|| solve_rate(black_box(&q)).unwrap()));
}

fn swendsen_wang(c: &mut Criterion) {
    let mut g = c.benchmark_group("sw_sweep");
    for side in [32usize, 64] {
        g.bench_function(format!("free_{side}"), |b| {
            b.iter_batched_ref(
                || {
                    let mut rng = chain_rng(1, 0);
                    let spins = SpinConfig::random(side, side, &mut rng).unwrap();
                    (SwChain::new(spins, 0.45, SpinBc::Free), rng)
                },
                |(chain, rng)| chain.sweep(rng),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, green, rate, swendsen_wang);
criterion_main!(benches);
