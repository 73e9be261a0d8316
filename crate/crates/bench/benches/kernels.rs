//! Microbenchmarks for the per-step hot paths: channel generation, the
//! secure-sum objective, and Q-network forward/backward passes.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ris_lab_core::channel::generate;
use ris_lab_core::config::{spaced_user_distances, LinearConfig, SystemConfig};
use ris_lab_core::dqn::{td_loss, Transition};
use ris_lab_core::rates::{make_precoders, PrecoderPolicy, Scheme, SecureSumEvaluator};
use ris_lab_core::ris::PhaseConfig;
use ris_lab_core::stream::{Domain, Streams};
use ris_lab_core::QNet;

fn desk(l: usize) -> LinearConfig {
    SystemConfig {
        k: 3,
        m: 2,
        l,
        d_rk: spaced_user_distances(3),
        ..SystemConfig::default()
    }
    .to_linear()
    .unwrap()
}

fn bench_channel(c: &mut Criterion) {
    let cfg = desk(30);
    let streams = Streams::new(1);
    c.bench_function("channel_generate_L30", |b| {
        let mut rng = streams.rng(Domain::Channel, 0);
        b.iter(|| generate(black_box(&cfg), &mut rng).unwrap())
    });
}

fn bench_secure_sum(c: &mut Criterion) {
    let cfg = desk(30);
    let streams = Streams::new(1);
    let mut rng = streams.rng(Domain::Channel, 0);
    let ch = generate(&cfg, &mut rng).unwrap();
    let zeros = PhaseConfig::zeros(cfg.l, cfg.mu).unwrap();
    let mut prng = streams.rng(Domain::Eval, 0);
    let pre = make_precoders(&ch, &zeros, PrecoderPolicy::Matched, &mut prng);
    let ev = SecureSumEvaluator::new(&cfg, &ch, &pre, Scheme::Rsma).unwrap();
    let indices: Vec<u16> = (0..cfg.l as u16).map(|i| i % 4).collect();
    c.bench_function("secure_sum_L30", |b| {
        b.iter(|| ev.secure_sum_indices(black_box(&indices)))
    });
}

fn bench_qnet(c: &mut Criterion) {
    let streams = Streams::new(1);
    let mut rng = streams.rng(Domain::NetInit, 0);
    let sizes = [24usize, 30, 50, 80, 16];
    let net = QNet::new(&sizes, &mut rng).unwrap();
    let target = QNet::new(&sizes, &mut rng).unwrap();
    let input: Vec<f64> = (0..sizes[0]).map(|i| (i as f64).sin()).collect();
    c.bench_function("qnet_forward", |b| {
        b.iter(|| net.forward(black_box(&input)).unwrap())
    });
    let transitions: Vec<Transition> = (0..10)
        .map(|t| Transition {
            state: (0..sizes[0]).map(|i| ((i + t) as f64).sin()).collect(),
            action: t % sizes[4],
            reward: 0.01 * t as f64,
            next_state: (0..sizes[0]).map(|i| ((i + t) as f64).cos()).collect(),
            terminal: t == 9,
        })
        .collect();
    let batch: Vec<&Transition> = transitions.iter().collect();
    c.bench_function("td_loss_batch10", |b| {
        b.iter(|| td_loss(black_box(&net), &target, &batch, 0.9).unwrap())
    });
}

criterion_group!(kernels, bench_channel, bench_secure_sum, bench_qnet);
criterion_main!(kernels);
