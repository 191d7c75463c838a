use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freqpol::elements::NoiseAngles;
use freqpol::parallel::Execution;
use freqpol::protocols::{
    grid_points, qber_vs_theta_sweep_with, AngleGrid, BasisPair, Bbm92Setup, QssSetup,
};

fn bbm92(c: &mut Criterion) {
    let a = NoiseAngles::new(0.6, 0.3).unwrap().params();
    let b = NoiseAngles::new(1.1, 2.0).unwrap().params();
    let setup = Bbm92Setup::new(a, b).unwrap();
    let mut group = c.benchmark_group("bbm92_20k_pairs");
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| setup.run(20_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn qss(c: &mut Criterion) {
    let n = NoiseAngles::new(0.9, 4.0).unwrap().params();
    let setup = QssSetup::new([n; 3], BasisPair::XY).unwrap();
    let mut group = c.benchmark_group("qss_10k_triples");
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| setup.run(10_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let theta: AngleGrid = "0:1.5:4".parse().unwrap();
    let fixed = AngleGrid::fixed(0.0);
    let points = grid_points(&theta, &fixed, &theta, &fixed).unwrap();
    let mut group = c.benchmark_group("sweep_16_points");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| qber_vs_theta_sweep_with(&points, 2_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bbm92, qss, sweep);
criterion_main!(benches);
