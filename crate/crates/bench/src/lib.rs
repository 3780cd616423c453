//! Shared fixtures for the criterion benches.

use nlkernel::datagen::{generate, Corpus, Dataset, GeneratorSpec, ReferenceKernel, Synthesis};
use nlkernel::kernelspec::KernelModel;

/// A sign-changing order-20 Bernstein kernel of horizon 0.5.
pub fn sample_model() -> KernelModel {
    let order = 20;
    let c: Vec<f64> = (0..=order).map(|k| 1.0 + 0.1 * k as f64).collect();
    let d: Vec<f64> = (0..=order).map(|k| if k > 14 { -0.5 } else { 0.0 }).collect();
    KernelModel::standard(0.5, c, d).expect("valid model")
}

/// A small manufactured dataset with the cosine sign-changing reference.
pub fn sample_dataset(n_samples: usize) -> Dataset {
    let spec = GeneratorSpec::Manufactured {
        kernel: ReferenceKernel::CosineSignChanging,
        delta: 0.5,
        corpus: Corpus::Mixed,
        synthesis: Synthesis::Spectral,
        intervals: 100,
    };
    generate(&spec, n_samples, 1).expect("dataset")
}
