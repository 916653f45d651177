use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use spinfill::discretize::{classify_values, Class};
use spinfill::energy::{delta_pair_sum, sample_correlation, EnergyState};
use spinfill::experiment::benchmark_spec;
use spinfill::fieldgen::MaternGenerator;
use spinfill::ising::{classify_ising, IsingRunConfig};
use spinfill::knn::{knn_oracle_best, KnnConfig};
use spinfill::optimizer::{greedy_optimize, OptimizerConfig, SweepMode};
use spinfill::potts::{classify_potts, PottsRunConfig};
use spinfill::stencil::{stencil_init, StencilConfig};
use spinfill_bench::fixture;

fn energy(c: &mut Criterion) {
    let fx = fixture(16, 0.33, 1);
    let sample = classify_values(&fx.train, &fx.thresholds);
    let domain = fx.thresholds.domain();
    let field = stencil_init(&sample, &domain, &StencilConfig::new(7, 1).unwrap()).unwrap();
    let free = field.free_nodes();
    c.bench_function("delta_pair_sum/potts16 all free nodes", |b| {
        b.iter(|| {
            free.iter()
                .map(|&i| delta_pair_sum(&field, i, Class::new(8)).unwrap())
                .sum::<i64>()
        })
    });
}

fn stencil(c: &mut Criterion) {
    let fx = fixture(16, 0.66, 2);
    let sample = classify_values(&fx.train, &fx.thresholds);
    let domain = fx.thresholds.domain();
    let cfg = StencilConfig::new(7, 3).unwrap();
    c.bench_function("stencil_init/50x50 p=0.66", |b| {
        b.iter(|| stencil_init(black_box(&sample), &domain, &cfg).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let fx = fixture(16, 0.5, 3);
    let sample = classify_values(&fx.train, &fx.thresholds);
    let domain = fx.thresholds.domain();
    let target = sample_correlation(&sample).unwrap();
    let init = stencil_init(&sample, &domain, &StencilConfig::new(7, 4).unwrap()).unwrap();
    let mut group = c.benchmark_group("greedy_optimize/potts16 50x50");
    for mode in [SweepMode::Sequential, SweepMode::Checkerboard] {
        let cfg = OptimizerConfig {
            mode,
            ..OptimizerConfig::default()
        };
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter_batched(
                || (init.clone(), EnergyState::new(&init, target).unwrap()),
                |(f, e)| greedy_optimize(f, e, &domain, &cfg).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn classifiers(c: &mut Criterion) {
    let fx = fixture(16, 0.33, 4);
    let mut group = c.benchmark_group("classify 50x50 N_c=16 p=0.33");
    group.sample_size(20);
    group.bench_function("ising", |b| {
        b.iter(|| classify_ising(&fx.train, &IsingRunConfig::new(16, 5)).unwrap())
    });
    group.bench_function("potts", |b| {
        b.iter(|| classify_potts(&fx.train, &PottsRunConfig::new(16, 5)).unwrap())
    });
    group.bench_function("knn oracle k<=25", |b| {
        b.iter(|| {
            knn_oracle_best(
                &fx.train,
                &fx.thresholds,
                &fx.truth,
                &fx.mask,
                &KnnConfig::default(),
            )
            .unwrap()
        })
    });
    group.finish();
    black_box(&fx.full);
}

fn fieldgen(c: &mut Criterion) {
    let mut spec = benchmark_spec();
    spec.lx = 30;
    spec.ly = 30;
    let mut group = c.benchmark_group("fieldgen 30x30");
    group.sample_size(10);
    group.bench_function("factorize", |b| b.iter(|| MaternGenerator::new(&spec).unwrap()));
    let generator = MaternGenerator::new(&spec).unwrap();
    group.bench_function("sample", |b| b.iter(|| generator.sample(black_box(7))));
    group.finish();
}

criterion_group!(benches, energy, stencil, optimizer, classifiers, fieldgen);
criterion_main!(benches);
