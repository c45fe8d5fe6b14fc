use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dcchain_core::assembly::{build_ninebus, build_sdcib, NineBusParams, SdcibParams};
use dcchain_core::equilibrium::solve_default;
use dcchain_core::smallsignal::{linearize, modal_analysis, poa_default};
use dcchain_core::timedomain::{simulate, InputSignal, SimOptions};

fn sdcib(c: &mut Criterion) {
    let p = SdcibParams::default();
    let m = build_sdcib(&p).unwrap();
    let op = solve_default(&m, p.p_load).unwrap();
    let lin = linearize(&m, &op).unwrap();

    c.bench_function("sdcib/build", |b| b.iter(|| build_sdcib(black_box(&p)).unwrap()));
    c.bench_function("sdcib/equilibrium", |b| b.iter(|| solve_default(&m, black_box(p.p_load)).unwrap()));
    c.bench_function("sdcib/linearize", |b| b.iter(|| linearize(&m, black_box(&op)).unwrap()));
    c.bench_function("sdcib/modes", |b| b.iter(|| modal_analysis(black_box(&lin)).unwrap()));
    c.bench_function("sdcib/poa_400", |b| b.iter(|| poa_default(black_box(&lin)).unwrap()));

    let step = InputSignal::Step {
        t0: 0.1,
        from: p.p_load,
        to: p.p_load + 0.1,
    };
    let mut g = c.benchmark_group("sdcib/simulate");
    g.sample_size(10);
    g.bench_function("step_1s", |b| {
        b.iter(|| simulate(&m, &op, black_box(&step), &SimOptions::reduced(1.0)).unwrap())
    });
    g.finish();
}

fn ninebus(c: &mut Criterion) {
    let p = NineBusParams::default();
    let m = build_ninebus(&p).unwrap();
    let op = solve_default(&m, p.p_load).unwrap();
    let lin = linearize(&m, &op).unwrap();
    c.bench_function("ninebus/equilibrium", |b| b.iter(|| solve_default(&m, black_box(p.p_load)).unwrap()));
    c.bench_function("ninebus/modes", |b| b.iter(|| modal_analysis(black_box(&lin)).unwrap()));
}

criterion_group!(benches, sdcib, ninebus);
criterion_main!(benches);
