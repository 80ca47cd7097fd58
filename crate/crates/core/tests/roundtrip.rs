use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use insitu_core::compressor::{error_metrics_with, CompressorSpec, ErrorTarget, Policy};
use insitu_core::exec::Strategy;
use insitu_core::mapper::{
    infer, load_weights, save_weights, EvalSet, InferenceOptions, Model, Tensor, TensorSet,
};
use insitu_core::perf::EnergyParams;
use insitu_core::CellArray;

#[test]
fn weights_survive_save_and_load() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut set = TensorSet::new();
    for (name, shape) in [("fc1", vec![7, 5]), ("fc1.bias", vec![7]), ("conv", vec![3, 2, 3, 3])] {
        let len: usize = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>().powi(8)).collect();
        set.insert(name.to_string(), Tensor::new(shape, data).unwrap());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    save_weights(&set, &path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), set);
}

#[test]
fn array_text_and_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<bool>> = (0..16).map(|_| (0..32).map(|_| rng.gen()).collect()).collect();
    let array = CellArray::from_rows(&rows).unwrap();
    let mut text = Vec::new();
    array.write_text(&mut text).unwrap();
    assert_eq!(CellArray::read_text(text.as_slice()).unwrap(), array);
    let mut csv = Vec::new();
    array.write_csv(&mut csv).unwrap();
    assert_eq!(CellArray::read_csv(csv.as_slice()).unwrap(), array);
}

#[test]
fn spec_and_params_round_trip() {
    let spec = CompressorSpec::approximate();
    assert_eq!(CompressorSpec::parse(&spec.to_text()).unwrap(), spec);
    let p = EnergyParams::default();
    assert_eq!(EnergyParams::from_toml_str(&p.to_toml_string()).unwrap(), p);
}

#[test]
fn parallel_matches_sequential() {
    let spec = CompressorSpec::approximate();
    let target = ErrorTarget::Accumulate { width: 6, addends: 5 };
    let policy = Policy::Sampled { samples: 50_000, seed: 3 };
    assert_eq!(
        error_metrics_with(Strategy::Sequential, &spec, target, policy).unwrap(),
        error_metrics_with(Strategy::Parallel, &spec, target, policy).unwrap()
    );

    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/digits");
    let model = Model::load(dir.join("mlp.json")).unwrap();
    let mut eval = EvalSet::load(dir.join("eval.csv")).unwrap();
    eval.features.truncate(40);
    eval.labels.truncate(40);
    let run = |strategy| {
        let opts = InferenceOptions { strategy, ..InferenceOptions::default() };
        infer(&model, &eval, &spec, &opts).unwrap()
    };
    let (a, b) = (run(Strategy::Sequential), run(Strategy::Parallel));
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.qor, b.qor);
    assert_eq!(a.samples, b.samples);
}
