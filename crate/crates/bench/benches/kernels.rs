//! Criterion benchmarks of the hot kernels: the dealiased pseudo-spectral
//! jacobian, its direct-convolution oracle, one integrating-factor RK4
//! step, and the spectral/physical transform round trip.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kolmo_core::experiments::random_field;
use kolmo_core::integrator::Stepper;
use kolmo_core::ops::{inv_laplacian, jacobian, jacobian_direct};
use kolmo_core::{ModelSpec, ModelVariant, SpectralField, TorusConfig};

fn field_on(n: usize, seed: u64) -> SpectralField {
    let grid = TorusConfig::new(2.0, n, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(&grid, 0.0, f64::MAX, true, 1.0, &mut rng).unwrap()
}

fn bench_jacobian(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian");
    for n in [64usize, 128] {
        let w = field_on(n, 7);
        let phi = inv_laplacian(&w);
        group.bench_function(format!("fast_{n}x{n}"), |b| {
            b.iter(|| jacobian(&phi, &w).unwrap())
        });
    }
    let w = field_on(32, 7);
    let phi = inv_laplacian(&w);
    group.bench_function("direct_32x32", |b| {
        b.iter(|| jacobian_direct(&phi, &w).unwrap())
    });
    group.finish();
}

fn bench_stepper(c: &mut Criterion) {
    let mut group = c.benchmark_group("stepper");
    for n in [64usize, 128] {
        let grid = TorusConfig::new(2.0, n, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_field(&grid, 0.0, f64::MAX, true, 1.0, &mut rng).unwrap();
        let model = ModelSpec::new(ModelVariant::NonlinearNs, 1, 0.01).unwrap();
        let mut stepper = Stepper::new(model, &grid, 0.01).unwrap();
        group.bench_function(format!("nonlinear_step_{n}x{n}"), |b| {
            b.iter_batched(
                || w.clone(),
                |mut state| stepper.step_in_place(0.0, &mut state).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    let grid = TorusConfig::new(2.0, 16, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_field(&grid, 4.0, 16.0, false, 1.0, &mut rng).unwrap();
    let model = ModelSpec::new(ModelVariant::LinearizedCombined, 1, 0.01).unwrap();
    let mut stepper = Stepper::new(model, &grid, 0.01).unwrap();
    group.bench_function("shear_only_step_16x128", |b| {
        b.iter_batched(
            || w.clone(),
            |mut state| stepper.step_in_place(0.0, &mut state).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in [64usize, 128] {
        let w = field_on(n, 11);
        group.bench_function(format!("roundtrip_{n}x{n}"), |b| {
            b.iter(|| SpectralField::from_physical(&w.to_physical()))
        });
    }
    group.finish();
}

criterion_group!(kernels, bench_jacobian, bench_stepper, bench_transforms);
criterion_main!(kernels);
