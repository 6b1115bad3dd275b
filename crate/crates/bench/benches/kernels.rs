use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fbarron::spectral::{coefficients, reconstruct};
use fbarron::train::{train, TrainConfig};
use fbarron::CoeffVector;
use fbarron_bench::{cubic, cubic_data, dense_net};

fn spectral(c: &mut Criterion) {
    let f = cubic(4);
    let mut g = c.benchmark_group("coefficients");
    for l in [8u32, 32, 128] {
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| {
            b.iter(|| coefficients(black_box(&f), l, 8 * l as usize).unwrap())
        });
    }
    g.finish();

    let table = coefficients(&f, 32, 256).unwrap();
    let v = CoeffVector::raw(vec![0.1, -0.2, 0.3, 0.05]);
    c.bench_function("reconstruct/32", |b| b.iter(|| reconstruct(black_box(&table), black_box(&v)).unwrap()));
}

fn network(c: &mut Criterion) {
    let mut g = c.benchmark_group("net");
    for m in [16usize, 256] {
        let net = dense_net(8, m, 1);
        let x = vec![0.1; 8];
        g.bench_with_input(BenchmarkId::new("forward", m), &m, |b, _| b.iter(|| net.forward(black_box(&x)).unwrap()));
        g.bench_with_input(BenchmarkId::new("gradient", m), &m, |b, _| {
            b.iter(|| net.gradient(black_box(&x), 1.0).unwrap())
        });
    }
    g.finish();
}

fn epoch(c: &mut Criterion) {
    let data = cubic_data(8, 4096, 2);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut g = c.benchmark_group("train_epoch");
    g.sample_size(10);
    for m in [16usize, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| train(dense_net(8, m, 3), black_box(&data), &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, network, epoch);
criterion_main!(benches);
