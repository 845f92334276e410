use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gw_mmse_core::mmse::{partial_correlate, solve_group_weights};
use gw_mmse_core::window::batch_autocorr;
use gw_mmse_core::{ChannelModel, ChannelParams, GoldCodeSpec, InterfererSpec, NoiseSpec};

fn weights(c: &mut Criterion) {
    let code = gw_mmse_core::prn::generate_gold_code(&GoldCodeSpec::gps_l1_ca(), 1).unwrap();
    let model = ChannelModel::new(
        ChannelParams {
            code,
            power: 1.0,
            bit_seed: 1,
        },
        &[InterfererSpec {
            delay: 18,
            isr_db: 20.0,
            bit_epoch_offset: 0,
            polarity_seed: 2,
        }],
        NoiseSpec {
            variance: 500.0,
            seed: 3,
        },
    )
    .unwrap();
    let epochs: Vec<Vec<f64>> = (0..1200).map(|e| model.synthesize_epoch(e).r).collect();
    let s0 = model.replica().to_vec();

    let mut group = c.benchmark_group("weight_solve");
    group.sample_size(20);
    // M = 16, 64 and 1024
    for g in [64usize, 16, 1] {
        let cs: Vec<Vec<f64>> = epochs
            .iter()
            .map(|r| partial_correlate(r, &s0, g).unwrap().c)
            .collect();
        let r = batch_autocorr(cs.iter().map(|v| v.as_slice())).unwrap();
        group.bench_with_input(BenchmarkId::new("g", g), &r, |b, r| {
            b.iter(|| black_box(solve_group_weights(r, g, 1.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, weights);
criterion_main!(benches);
