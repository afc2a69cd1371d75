//! Saves a model, reloads it, and shows how a damaged file is rejected.

use drgrade::model::{DualBranchModel, ModelConfig};
use drgrade::nn::{Layer, Mode, Tensor};
use drgrade::rng::RngState;
use drgrade::train::{synthetic_blobs, BlobSpec, LabeledImages};

fn main() -> drgrade::Result<()> {
    let dir = std::env::temp_dir().join("drgrade_weights_example");
    std::fs::create_dir_all(&dir).map_err(|e| drgrade::Error::io(&dir, e))?;
    let path = dir.join("model.weights");

    let cfg = ModelConfig::default();
    let mut model = DualBranchModel::<f32>::build(&cfg, 11)?;
    let (imgs, labels) = synthetic_blobs(8, &BlobSpec::default(), &RngState::new(0, "x"));
    let x = LabeledImages::<f32>::from_images(&imgs, labels)?.images;
    model.forward(&x, Mode::Train)?;
    model.save_weights(&path)?;

    let mut back = DualBranchModel::<f32>::load(&cfg, &path)?;
    let a: Tensor<f32> = model.forward(&x, Mode::Eval)?;
    let b = back.forward(&x, Mode::Eval)?;
    println!("{} tensors, outputs identical: {}", model.named_tensors().len(), a.data() == b.data());

    let mut bytes = std::fs::read(&path).map_err(|e| drgrade::Error::io(&path, e))?;
    bytes.truncate(bytes.len() / 2);
    std::fs::write(&path, &bytes).map_err(|e| drgrade::Error::io(&path, e))?;
    match DualBranchModel::<f32>::load(&cfg, &path) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("truncated file rejected: {e}"),
    }
    Ok(())
}
