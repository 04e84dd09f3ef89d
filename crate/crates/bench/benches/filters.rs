use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latfilter::rtv::{assemble_system, decomposition_weights, pcg_max_iterations};
use latfilter::solver::solve_pcg;
use latfilter::{
    add_gaussian_noise, diffuse_lat, rtv_filter, synth_piecewise, DiffusionConfig, Image, NoiseSpec, RtvConfig,
    RtvMode, SynthKind, Variant,
};

fn noisy(side: usize) -> Image {
    let clean = synth_piecewise(SynthKind::Clipart, side, side, 1).unwrap();
    add_gaussian_noise(&clean, &NoiseSpec::default()).unwrap()
}

fn bench_diffusion(c: &mut Criterion) {
    let mut group = c.benchmark_group("diffuse_lat");
    let img = noisy(128);
    for variant in [Variant::Flat, Variant::Tlat, Variant::Plat, Variant::FlatI] {
        let cfg = DiffusionConfig::for_variant(variant);
        group.bench_with_input(BenchmarkId::from_parameter(variant), &cfg, |b, cfg| {
            b.iter(|| diffuse_lat(black_box(&img), cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_rtv(c: &mut Criterion) {
    let mut group = c.benchmark_group("rtv_filter");
    group.sample_size(10);
    for side in [64, 128] {
        let img = noisy(side);
        let cfg = RtvConfig { mode: RtvMode::LatRtvd, lambda: 5e-4, ..Default::default() };
        group.bench_with_input(BenchmarkId::new("lat_rtvd", side), &img, |b, img| {
            b.iter(|| rtv_filter(black_box(img), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_pcg(c: &mut Criterion) {
    let mut group = c.benchmark_group("pcg");
    group.sample_size(20);
    for side in [32, 64, 128] {
        let img = noisy(side);
        let cfg = RtvConfig::default();
        let weights = decomposition_weights(&img, &cfg).unwrap();
        let system = assemble_system(&weights, cfg.lambda, &img).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side), &system, |b, sys| {
            b.iter(|| solve_pcg(black_box(sys), cfg.tolerance, pcg_max_iterations(sys.n())).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_diffusion, bench_rtv, bench_pcg);
criterion_main!(benches);
