use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vigil_core::dsp::{preprocess, PreprocessConfig};
use vigil_core::features::{extract, LDA_OFFSET, TF_OFFSET};
use vigil_core::model::synthesize;
use vigil_core::{BandDefinition, FeatureMatrix, Label, SynthConfig};

/// Easy-preset feature matrix of `n_blocks` x 20 trials.
pub fn easy_matrix(n_blocks: usize, seed: u64) -> FeatureMatrix {
    let rec = synthesize(&SynthConfig { n_blocks, trials_per_block: 20, seed, ..Default::default() }).unwrap();
    let pre = preprocess(&rec, &PreprocessConfig::default()).unwrap().recording;
    extract(&pre, &BandDefinition::standard()).unwrap().matrix
}

/// 80-trial matrix whose labels are the sign of column 0. Every fourth column
/// is a noisy copy of a latent value kept at least 0.5 from zero and the rest
/// are pure noise; the fold-time LDA columns stay uninformative.
pub fn planted(seed: u64) -> FeatureMatrix {
    let mut fm = easy_matrix(4, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..fm.n_rows() {
        let n: f64 = rng.sample(StandardNormal);
        let z = if i % 2 == 0 { 0.5 + n.abs() } else { -0.5 - n.abs() };
        for (j, v) in fm.row_mut(i).iter_mut().enumerate() {
            if (LDA_OFFSET..TF_OFFSET).contains(&j) {
                continue;
            }
            let e: f64 = rng.sample(StandardNormal);
            *v = if j % 4 == 0 { z + 0.05 * e } else { e };
        }
    }
    fm.labels = (0..fm.n_rows()).map(|i| if fm.row(i)[0] > 0.0 { Label::Face } else { Label::Scene }).collect();
    fm
}
