use criterion::{black_box, criterion_group, criterion_main, Criterion};
use spinsim_core::acceptance::{CITRATE, DEMO4, EQ13};
use spinsim_core::acquisition::{tomo_offdiagonal_2d, Tomo2DOptions};
use spinsim_core::assignment::{reconstruct_levels, ConnectivityMatrix};
use spinsim_core::protocols::epr_create;
use spinsim_core::{
    eigensystem, equilibrium_deviation, selective_pulse_unitary, transition_catalog, SpinSystem, DEFAULT_THRESHOLD,
};

fn kernels(c: &mut Criterion) {
    let citrate = SpinSystem::parse(CITRATE).unwrap();
    let demo4 = SpinSystem::parse(DEMO4).unwrap();

    c.bench_function("eigensystem n=4", |b| {
        b.iter(|| eigensystem(black_box(&demo4), false).unwrap())
    });

    let es4 = eigensystem(&demo4, false).unwrap();
    let cat4 = transition_catalog(&es4, DEFAULT_THRESHOLD);
    let eq4 = equilibrium_deviation(&es4);
    let t = &cat4.entries[0];
    c.bench_function("selective pulse n=4", |b| {
        b.iter(|| {
            let u = selective_pulse_unitary(&es4, t.lower, t.upper, black_box(90.0), 0.0).unwrap();
            eq4.apply(&u)
        })
    });

    let es2 = eigensystem(&citrate, false).unwrap();
    let cat2 = transition_catalog(&es2, DEFAULT_THRESHOLD);
    let epr = epr_create(&es2, &cat2).unwrap().final_state;
    let opts = Tomo2DOptions {
        t1_points: 128,
        t2_points: 512,
        ..Tomo2DOptions::default()
    };
    c.bench_function("2D tomography n=2 128x512", |b| {
        b.iter(|| tomo_offdiagonal_2d(&es2, &cat2, black_box(&epr), opts).unwrap())
    });

    let cm = ConnectivityMatrix::parse(EQ13).unwrap().padded(&[9]);
    c.bench_function("level assignment eq13", |b| {
        b.iter(|| reconstruct_levels(black_box(&cm), 3, 64).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
