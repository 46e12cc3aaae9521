use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vigil_core::dsp::{analytic_envelope, cwt_power, design_butterworth_bandpass, filtfilt, WaveletBank};
use vigil_core::ml::{
    rf_train, svm_train, Criterion as SplitCriterion, Matrix, MaxFeatures, RfHyperParams, SvmHyperParams,
};
use vigil_core::tune::{optimize, Sampler};
use vigil_core::{BandDefinition, Label, SearchSpace, Study};

const FS: f64 = 250.0;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// 320 trials x 64 features with a linear class rule plus noise.
fn dataset() -> (Matrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..320).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels = rows
        .iter()
        .map(|r| if r[0] + r[1] + 0.3 * rng.random_range(-1.0..1.0) > 0.0 { Label::Face } else { Label::Scene })
        .collect();
    (Matrix::from_rows(&rows), labels)
}

fn dsp(c: &mut Criterion) {
    // one block: 62 s at 250 Hz
    let x = noise(62 * 250, 1);
    let filt = design_butterworth_bandpass(5, 0.4, 40.0, FS).unwrap();
    c.bench_function("filtfilt 5th order, 62 s", |b| b.iter(|| filtfilt(&filt, black_box(&x)).unwrap()));

    let alpha = BandDefinition::new("alpha", 8.0, 14.0);
    c.bench_function("alpha envelope, 62 s", |b| b.iter(|| analytic_envelope(black_box(&x), &alpha, FS).unwrap()));

    let bank = WaveletBank::standard(FS).unwrap();
    let trial = noise(250, 2);
    c.bench_function("Morlet CWT, 1 s trial", |b| b.iter(|| cwt_power(black_box(&trial), &bank).unwrap()));
}

fn classifiers(c: &mut Criterion) {
    let (x, y) = dataset();
    let mut g = c.benchmark_group("train 320x64");
    g.sample_size(10);
    g.bench_function("svm", |b| b.iter(|| svm_train(&x, &y, &SvmHyperParams { c: 10.0, gamma: 0.01 }).unwrap()));
    let hp = RfHyperParams {
        n_estimators: 10,
        max_depth: 10,
        min_samples_split: 2,
        min_samples_leaf: 2,
        max_features: MaxFeatures::Sqrt,
        criterion: SplitCriterion::Gini,
    };
    g.bench_function("rf", |b| b.iter(|| rf_train(&x, &y, &hp, 1).unwrap()));
    g.finish();
}

fn tuner(c: &mut Criterion) {
    let space = SearchSpace::svm();
    c.bench_function("tpe 50 trials, quadratic", |b| {
        b.iter(|| {
            let mut study = Study::new("bench", None, space.clone(), 1);
            optimize(&mut study, 50, Sampler::Tpe, |p| {
                Ok(p.values().filter_map(|v| v.as_f64()).map(|v| -v.log10().powi(2)).sum())
            })
            .unwrap();
            study
        })
    });
}

criterion_group!(benches, dsp, classifiers, tuner);
criterion_main!(benches);
