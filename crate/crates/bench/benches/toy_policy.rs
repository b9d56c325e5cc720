use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use sumread_core::bundled;
use sumread_core::toy::{
    dpo_gradient, init_policy, sft_gradient, train, TokenExample, ToyDataset, ToyVocab, TrainConfig,
};

fn toy(c: &mut Criterion) {
    let vocab = ToyVocab::standard(16).unwrap();
    let pairs = bundled::separable_pairs(&vocab).unwrap();
    let reference = init_policy(vocab.clone(), 64, 0).unwrap();
    let policy = init_policy(vocab.clone(), 64, 1).unwrap();
    let sft: Vec<TokenExample> = pairs
        .iter()
        .map(|p| TokenExample {
            prompt: p.prompt.clone(),
            target: p.chosen.clone(),
        })
        .collect();

    c.bench_function("dpo_gradient_200_pairs", |b| {
        b.iter(|| dpo_gradient(black_box(&policy), &reference, &pairs, 0.1))
    });
    c.bench_function("sft_gradient_200_examples", |b| {
        b.iter(|| sft_gradient(black_box(&policy), &sft))
    });

    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    let config = TrainConfig {
        steps: 50,
        ..TrainConfig::dpo()
    };
    group.bench_function("dpo_50_steps", |b| {
        b.iter(|| train(reference.clone(), &config, &ToyDataset::Dpo(pairs.clone())))
    });
    group.finish();
}

criterion_group!(benches, toy);
criterion_main!(benches);
