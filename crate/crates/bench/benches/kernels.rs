use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fluctuate_core::lddist::{limit_rmax, pmf_rmax};
use fluctuate_core::simulate::culture_rng;
use fluctuate_core::{
    grow_culture, ldd_pmf, solve_renewal, CellType, CircleSample, CloneSizePgf, Complex64,
    LifetimeDistribution, OffspringDistribution, PgfMethod, ProliferationModel, SimConfig,
    StopRule,
};

fn kendall2() -> ProliferationModel {
    ProliferationModel::new(
        OffspringDistribution::binary(),
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    )
    .unwrap()
}

fn renewal(c: &mut Criterion) {
    let model = kendall2();
    let points: Vec<Complex64> = (0..16)
        .map(|j| Complex64::from_polar(0.95, std::f64::consts::TAU * j as f64 / 16.0))
        .collect();
    let horizon = 30.0 / model.beta();
    let mut group = c.benchmark_group("renewal");
    group.sample_size(10);
    group.bench_function("kendall2_16_points_h1e-2", |b| {
        b.iter(|| solve_renewal(&model, black_box(&points), 1e-2, horizon).unwrap())
    });
    group.finish();
}

fn phase_type(c: &mut Criterion) {
    let pgf = CloneSizePgf::new(&kendall2(), PgfMethod::PhaseType).unwrap();
    let s = Complex64::new(0.3, 0.8);
    c.bench_function("phase_type_g_one_point", |b| {
        b.iter(|| pgf.eval(black_box(s)).unwrap())
    });
}

fn pmf(c: &mut Criterion) {
    let model = kendall2();
    let pgf = CloneSizePgf::new(&model, PgfMethod::Auto).unwrap();
    let m = 4.0;
    let rmax = pmf_rmax(model.n1(), m);
    let mut group = c.benchmark_group("pmf");
    group.sample_size(10);
    group.bench_function("kendall2_m4_full", |b| {
        b.iter(|| ldd_pmf(&pgf, black_box(m), rmax, None).unwrap())
    });
    let rmax = limit_rmax(model.n1(), 64.0);
    let circle = CircleSample::new(&pgf, rmax, None).unwrap();
    group.bench_function("kendall2_m64_reuse_circle", |b| {
        b.iter(|| circle.pmf(black_box(64.0), rmax).unwrap())
    });
    group.finish();
}

fn culture(c: &mut Criterion) {
    let cell = CellType {
        offspring: OffspringDistribution::binary(),
        lifetime: LifetimeDistribution::exponential(1.0).unwrap(),
    };
    let config = SimConfig::symmetric(cell, 1e-4, StopRule::Population(100_000), 42, 1);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    let mut index = 0;
    group.bench_function("yule_culture_1e5", |b| {
        b.iter(|| {
            index += 1;
            grow_culture(&config, &mut culture_rng(42, index)).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, renewal, phase_type, pmf, culture);
criterion_main!(benches);
