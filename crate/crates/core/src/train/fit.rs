use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::LabeledImages;
use super::loss::cce_loss;
use crate::error::{Error, Result};
use crate::metrics::{per_class_report, ConfusionMatrix, MetricsReport};
use crate::model::DualBranchModel;
use crate::nn::{sgd_momentum_step, Layer, Mode, Scalar};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    Binary,
    #[default]
    Multiclass,
}

impl TaskMode {
    pub fn classes(self) -> usize {
        match self {
            TaskMode::Binary => 2,
            TaskMode::Multiclass => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Complement-entropy weight.
    pub gamma: f64,
    pub task: TaskMode,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 0.06,
            momentum: 0.66,
            batch_size: 32,
            seed: 0,
            gamma: -1.0,
            task: TaskMode::Multiclass,
            eval_batch: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::param(format!("lr {} must be finite and >= 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param(format!("momentum {} outside [0,1)", self.momentum)));
        }
        if self.epochs == 0 || self.batch_size < 2 || self.eval_batch == 0 {
            return Err(Error::param("epochs >= 1, batch_size >= 2 and eval_batch >= 1 required"));
        }
        if !self.gamma.is_finite() {
            return Err(Error::param("gamma must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    pub accuracy: f64,
}

/// One line of the JSONL history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    /// Undefined kappa is recorded as 0.
    pub val_qwk: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub epoch: usize,
    pub val_qwk: f64,
    pub weights_path: Option<PathBuf>,
    pub metrics: Option<MetricsReport>,
}

/// What an evaluator reports for one validation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub qwk: Option<f64>,
    pub accuracy: f64,
    pub report: Option<MetricsReport>,
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Best weights are written here whenever validation QWK improves.
    pub checkpoint: Option<PathBuf>,
    /// Per-epoch JSONL history.
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub best: CheckpointRecord,
    pub history: Vec<EpochRecord>,
}

/// Error plus the epochs completed before it.
#[derive(Debug)]
pub struct FitFailure {
    pub error: Error,
    pub history: Vec<EpochRecord>,
}

impl From<FitFailure> for Error {
    fn from(f: FitFailure) -> Self {
        f.error
    }
}

pub fn argmax_rows(probs: &[f64], k: usize) -> Vec<usize> {
    probs
        .chunks(k)
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Batch index lists for one epoch; a trailing batch of one joins the previous batch.
pub fn epoch_batches(n: usize, batch: usize, rng: &RngState) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng.generator());
    let mut out: Vec<Vec<usize>> = idx.chunks(batch.max(1)).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().expect("nonempty");
        out.last_mut().expect("nonempty").extend(last);
    }
    out
}

/// One shuffled pass of SGD with momentum. `epoch` is 1-based and selects the
/// shuffle stream.
pub fn train_epoch<S: Scalar>(
    model: &mut DualBranchModel<S>,
    data: &LabeledImages<S>,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<EpochStats> {
    if data.len() < 2 {
        return Err(Error::param("training needs at least 2 samples"));
    }
    let k = model.classes();
    let batches = epoch_batches(data.len(), cfg.batch_size, &RngState::new(cfg.seed, "shuffle").child(epoch));
    let (mut loss_sum, mut correct) = (0.0, 0usize);
    for (b, idx) in batches.iter().enumerate() {
        let fail = |msg: String| Error::Training { epoch, batch: b, msg };
        let batch = data.select(idx)?;
        model.zero_grad();
        let logits = model.forward(&batch.images, Mode::Train).map_err(|e| fail(e.to_string()))?;
        let out = cce_loss(&logits, &batch.labels, cfg.gamma).map_err(|e| fail(e.to_string()))?;
        model.backward(&out.grad).map_err(|e| fail(e.to_string()))?;
        sgd_momentum_step(&mut model.params_mut(), cfg.lr, cfg.momentum).map_err(|e| fail(e.to_string()))?;
        loss_sum += out.loss * idx.len() as f64;
        correct += argmax_rows(&out.probs, k)
            .iter()
            .zip(&batch.labels)
            .filter(|(p, t)| p == t)
            .count();
    }
    Ok(EpochStats {
        loss: loss_sum / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
    })
}

/// Eval-mode probabilities and the metrics report for `data`.
pub fn evaluate<S: Scalar>(model: &mut DualBranchModel<S>, data: &LabeledImages<S>, batch: usize) -> Result<(Vec<f64>, MetricsReport)> {
    let k = model.classes();
    let probs = model.predict_proba(&data.images, batch)?;
    let cm = ConfusionMatrix::from_labels(&data.labels, &argmax_rows(&probs, k), k)?;
    Ok((probs, per_class_report(&cm)?))
}

pub fn default_validation<S: Scalar>(model: &mut DualBranchModel<S>, data: &LabeledImages<S>, batch: usize) -> Result<Validation> {
    let (_, report) = evaluate(model, data, batch)?;
    Ok(Validation {
        qwk: report.overall.qwk,
        accuracy: report.overall.accuracy,
        report: Some(report),
    })
}

pub fn fit<S: Scalar>(
    model: &mut DualBranchModel<S>,
    train: &LabeledImages<S>,
    val: &LabeledImages<S>,
    cfg: &TrainConfig,
    opts: &FitOptions,
) -> std::result::Result<FitResult, FitFailure> {
    let eb = cfg.eval_batch;
    fit_with(model, train, val, cfg, opts, |m, v, _| default_validation(m, v, eb))
}

/// [`fit`] with a custom validation step `evaluate(model, val, epoch)`.
///
/// The best epoch is the first to reach the maximum validation QWK; its
/// weights are restored into `model` before returning.
pub fn fit_with<S, E>(
    model: &mut DualBranchModel<S>,
    train: &LabeledImages<S>,
    val: &LabeledImages<S>,
    cfg: &TrainConfig,
    opts: &FitOptions,
    mut evaluate: E,
) -> std::result::Result<FitResult, FitFailure>
where
    S: Scalar,
    E: FnMut(&mut DualBranchModel<S>, &LabeledImages<S>, usize) -> Result<Validation>,
{
    let mut history = Vec::new();
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err(FitFailure { error, history }),
            }
        };
    }
    attempt!(cfg.validate());
    if val.is_empty() {
        attempt!(Err(Error::param("validation split is empty")));
    }
    let mut log_file = match &opts.history {
        Some(p) => Some(attempt!(std::fs::File::create(p).map_err(|e| Error::io(p, e)))),
        None => None,
    };
    model.reseed_dropout(&RngState::new(cfg.seed, "dropout"));
    let mut best: Option<(CheckpointRecord, Vec<crate::nn::Tensor<S>>)> = None;
    for epoch in 1..=cfg.epochs {
        let stats = attempt!(train_epoch(model, train, cfg, epoch));
        let v = attempt!(evaluate(model, val, epoch));
        let qwk = v.qwk.unwrap_or_else(|| {
            log::warn!("epoch {epoch}: validation QWK undefined, recorded as 0");
            0.0
        });
        let rec = EpochRecord {
            epoch,
            loss: stats.loss,
            train_accuracy: stats.accuracy,
            val_qwk: qwk,
            val_accuracy: v.accuracy,
        };
        log::info!(
            "epoch {epoch}/{}: loss {:.4} train_acc {:.3} val_qwk {:.4} val_acc {:.3}",
            cfg.epochs,
            rec.loss,
            rec.train_accuracy,
            rec.val_qwk,
            rec.val_accuracy
        );
        if let Some(f) = log_file.as_mut() {
            let line = serde_json::to_string(&rec).expect("serializable");
            let p = opts.history.as_ref().expect("history path");
            attempt!(writeln!(f, "{line}").map_err(|e| Error::io(p, e)));
        }
        history.push(rec);
        if best.as_ref().is_none_or(|(b, _)| qwk > b.val_qwk) {
            if let Some(p) = &opts.checkpoint {
                attempt!(model.save_weights(p));
            }
            let record = CheckpointRecord {
                epoch,
                val_qwk: qwk,
                weights_path: opts.checkpoint.clone(),
                metrics: v.report,
            };
            best = Some((record, model.snapshot()));
        }
    }
    let (record, snap) = best.expect("epochs >= 1");
    attempt!(model.restore(&snap));
    Ok(FitResult { best: record, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::train::data::{synthetic_blobs, BlobSpec};

    fn tiny_data(n: usize, seed: u64) -> LabeledImages<f64> {
        let spec = BlobSpec {
            size: 8,
            jitter: 0.5,
            ..BlobSpec::default()
        };
        let (imgs, labels) = synthetic_blobs(n, &spec, &RngState::new(seed, "synth"));
        LabeledImages::from_images(&imgs, labels).unwrap()
    }

    #[test]
    fn batches_merge_trailing_singleton() {
        let b = epoch_batches(65, 32, &RngState::new(0, "s"));
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![32, 33]);
        let mut all: Vec<usize> = b.concat();
        all.sort();
        assert_eq!(all, (0..65).collect::<Vec<_>>());
    }

    #[test]
    fn zero_lr_keeps_params() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 0).unwrap();
        let before: Vec<_> = m.params().iter().map(|p| p.value.clone()).collect();
        let cfg = TrainConfig { lr: 0.0, batch_size: 8, ..TrainConfig::default() };
        train_epoch(&mut m, &tiny_data(20, 1), &cfg, 1).unwrap();
        let after: Vec<_> = m.params().iter().map(|p| p.value.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn stub_evaluator_selects_first_max() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 0).unwrap();
        let data = tiny_data(10, 2);
        let seq = [0.2, 0.5, 0.4, 0.5];
        let cfg = TrainConfig { epochs: 4, batch_size: 5, ..TrainConfig::default() };
        let r = fit_with(&mut m, &data, &data, &cfg, &FitOptions::default(), |_, _, e| {
            Ok(Validation { qwk: Some(seq[e - 1]), accuracy: 0.0, report: None })
        })
        .unwrap();
        assert_eq!(r.best.epoch, 2);
        assert_eq!(r.history.len(), 4);
    }

    #[test]
    fn failure_keeps_history() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 0).unwrap();
        let data = tiny_data(10, 2);
        let cfg = TrainConfig { epochs: 3, batch_size: 5, ..TrainConfig::default() };
        let err = fit_with(&mut m, &data, &data, &cfg, &FitOptions::default(), |_, _, e| {
            if e == 2 {
                Err(Error::numeric("boom"))
            } else {
                Ok(Validation { qwk: None, accuracy: 0.0, report: None })
            }
        })
        .unwrap_err();
        assert_eq!(err.history.len(), 1);
        assert_eq!(err.history[0].val_qwk, 0.0);
    }

    #[test]
    fn loss_decreases_on_blobs() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 3).unwrap();
        let data = tiny_data(200, 4);
        let cfg = TrainConfig { batch_size: 20, ..TrainConfig::default() };
        let losses: Vec<f64> = (1..=5).map(|e| train_epoch(&mut m, &data, &cfg, e).unwrap().loss).collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{losses:?}");
        }
    }
}
