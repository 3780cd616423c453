use nlkernel::datagen::{generate, Corpus, Dataset, GeneratorSpec, ReferenceKernel, Synthesis};
use nlkernel::kernelspec::KernelModel;

fn spec() -> GeneratorSpec {
    GeneratorSpec::Manufactured {
        kernel: ReferenceKernel::CosineSignChanging,
        delta: 0.5,
        corpus: Corpus::Mixed,
        synthesis: Synthesis::Spectral,
        intervals: 100,
    }
}

#[test]
fn dataset_survives_disk_round_trip() {
    let data = generate(&spec(), 12, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();
    let back = Dataset::read(dir.path()).unwrap();
    assert_eq!(back.len(), data.len());
    for i in 0..data.len() {
        assert_eq!(back.u(i), data.u(i));
        assert_eq!(back.f(i), data.f(i));
    }
}

#[test]
fn model_json_round_trip_is_exact() {
    let m = KernelModel::standard(0.5, vec![1.0, 0.25, 1.0 / 3.0], vec![0.0, -0.1, 0.7]).unwrap();
    let text = m.to_json().unwrap();
    let back = KernelModel::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
}
