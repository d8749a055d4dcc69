use std::hint::black_box;

use auxlearn::loss::{Loss, LossConfig, OneHotLabel, Prediction};
use auxlearn::{
    compute_class_weights, confusion_matrix, train, Activation, LabeledExample, MlpModel,
    TrainConfig,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn examples(n: usize) -> Vec<LabeledExample> {
    (0..n)
        .map(|i| {
            let t = i as f64 * 0.37;
            LabeledExample {
                features: vec![t.sin() * 2.0, t.cos() * 2.0],
                label: i % 3,
            }
        })
        .collect()
}

fn losses(c: &mut Criterion) {
    let cfg = LossConfig::default();
    let p = Prediction::new(vec![0.2, 0.1, 0.7]).unwrap();
    let y = OneHotLabel::new(2, 3).unwrap();
    let wcce = Loss::Weighted(compute_class_weights(&[1.0, 1.0, 8.75]).unwrap());
    c.bench_function("cce value", |b| {
        b.iter(|| Loss::Categorical.value(black_box(&p), &y, &cfg).unwrap())
    });
    c.bench_function("wcce value", |b| {
        b.iter(|| wcce.value(black_box(&p), &y, &cfg).unwrap())
    });
}

fn model(c: &mut Criterion) {
    let cfg = LossConfig::default();
    let model = MlpModel::init(&[2, 16, 16, 3], Activation::Tanh, 1).unwrap();
    let x = [0.4, -1.2];
    let y = OneHotLabel::new(1, 3).unwrap();
    c.bench_function("forward", |b| {
        b.iter(|| model.forward(black_box(&x)).unwrap())
    });
    c.bench_function("forward+backward", |b| {
        b.iter(|| {
            let cache = model.forward(black_box(&x)).unwrap();
            model
                .backward(&cache, &y, &Loss::Categorical, &cfg)
                .unwrap()
        })
    });

    let data = examples(2048);
    let train_cfg = TrainConfig {
        learning_rate: 0.05,
        epochs: 1,
        batch_size: 64,
        seed: 7,
        loss: Loss::Categorical,
        loss_config: cfg,
    };
    c.bench_function("train epoch 2048", |b| {
        b.iter(|| {
            let mut m = model.clone();
            train(&mut m, &data, &train_cfg).unwrap()
        })
    });
}

fn metrics(c: &mut Criterion) {
    let truth: Vec<usize> = (0..10_000).map(|i| i % 5).collect();
    let pred: Vec<usize> = (0..10_000).map(|i| (i * 7 / 3) % 5).collect();
    c.bench_function("confusion matrix 10k", |b| {
        b.iter(|| confusion_matrix(black_box(&truth), black_box(&pred), 5).unwrap())
    });
}

criterion_group!(benches, losses, model, metrics);
criterion_main!(benches);
