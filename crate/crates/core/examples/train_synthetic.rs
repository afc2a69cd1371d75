//! Trains the dual-branch model on coloured-blob images whose position encodes the grade.
//!
//! `cargo run --release --example train_synthetic -- [epochs]`

use drgrade::model::{DualBranchModel, ModelConfig};
use drgrade::rng::RngState;
use drgrade::train::{fit, synthetic_blobs, BlobSpec, FitOptions, LabeledImages, TrainConfig};

fn main() -> drgrade::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let spec = BlobSpec::default();
    let (ti, tl) = synthetic_blobs(500, &spec, &RngState::new(1, "train"));
    let (vi, vl) = synthetic_blobs(100, &spec, &RngState::new(1, "val"));
    let train = LabeledImages::<f32>::from_images(&ti, tl)?;
    let val = LabeledImages::<f32>::from_images(&vi, vl)?;

    let cfg = TrainConfig { epochs, seed: 1, ..TrainConfig::default() };
    let mut model = DualBranchModel::<f32>::build(&ModelConfig::default(), cfg.seed)?;
    println!("{} parameters, branch widths {:?}", model.param_count(), model.branch_widths());
    let r = fit(&mut model, &train, &val, &cfg, &FitOptions::default())?;
    for h in &r.history {
        println!("epoch {:>2} loss {:.4} train_acc {:.3} val_qwk {:.4}", h.epoch, h.loss, h.train_accuracy, h.val_qwk);
    }
    println!("best epoch {} val QWK {:.4}", r.best.epoch, r.best.val_qwk);
    Ok(())
}
