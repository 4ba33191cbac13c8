use criterion::{black_box, criterion_group, criterion_main, Criterion};

use cnnpart_core::dse::sweep_glb;
use cnnpart_core::energy::{cumulative_energy, network_energy, EnergyOptions};
use cnnpart_core::fixtures::{self, TECH_BITS};
use cnnpart_core::partition::{candidate_energies, candidate_payloads, envelope, linspace, optimal_partition, scan_bitrate};
use cnnpart_core::schedule::schedule_layer;
use cnnpart_core::{at_bit_width, CommEnvironment};

fn model(c: &mut Criterion) {
    let net = fixtures::alexnet();
    let (acc, tech) = at_bit_width(&fixtures::eyeriss(), &fixtures::technology(), TECH_BITS, net.bit_width).unwrap();
    let opts = EnergyOptions::default();

    c.bench_function("schedule_alexnet", |b| {
        b.iter(|| {
            for l in &net.layers {
                black_box(schedule_layer(black_box(l), &acc).unwrap());
            }
        })
    });
    c.bench_function("energy_alexnet", |b| {
        b.iter(|| network_energy(black_box(&net), &acc, &tech, opts).unwrap())
    });

    let squeeze = fixtures::squeezenet();
    c.bench_function("energy_squeezenet", |b| {
        b.iter(|| network_energy(black_box(&squeeze), &acc, &tech, opts).unwrap())
    });

    let cum = cumulative_energy(&net, &acc, &tech, opts).unwrap();
    let e = candidate_energies(&cum, 0.0);
    let d = candidate_payloads(&net, 0.608).unwrap();
    let env = CommEnvironment {
        bitrate_bps: 100e6,
        ecc_overhead_pct: 0.0,
        tx_power_w: 0.78,
    };
    c.bench_function("optimal_partition", |b| {
        b.iter(|| optimal_partition(black_box(&e), black_box(&d), &env).unwrap())
    });
    c.bench_function("envelope", |b| b.iter(|| envelope(black_box(&e), black_box(&d), 0.78, 0.0)));
    let rates = linspace(1e6, 500e6, 1000);
    c.bench_function("scan_bitrate_1000", |b| {
        b.iter(|| scan_bitrate(black_box(&e), &d, 0.78, 0.0, &rates).unwrap())
    });

    let curve = fixtures::glb_curve().scaled(0.5).unwrap();
    let sizes: Vec<u64> = (1..=64).map(|k| k * 8192).collect();
    let mut g = c.benchmark_group("dse");
    g.sample_size(10);
    g.bench_function("sweep_glb_64", |b| {
        b.iter(|| sweep_glb(&net, &acc, &tech, &curve, black_box(&sizes), opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, model);
criterion_main!(benches);
