use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::augment::{resize_bilinear, variant, ImageU8};
use crate::dataset::{
    load_manifest, load_manifest_rows, plan_selective_augmentation, save_manifest_rows, selective_merge, stratified_split,
    DistributionReport, ManifestEntry, PlanItem, Split, SplitManifest, GRADE_NAMES,
};
use crate::error::{Error, Result};
use crate::metrics::{one_vs_rest_roc, per_class_report_with, ConfusionMatrix, MetricsReport, MulticlassRoc};
use crate::model::DualBranchModel;
use crate::plot::{heatmap, line_plot, Series};
use crate::rng::RngState;
use crate::train::{
    argmax_rows, blob_image, fit, gp_tune, quadratic_objective, BlobSpec, EpochRecord, FitOptions, LabeledImages, TaskMode,
    TrainConfig, TuneResult,
};

/// Files produced by one command, indexed in `run_<command>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub command: String,
    pub files: Vec<PathBuf>,
    /// One-line human summary, printed by the CLI.
    pub summary: String,
}

impl RunArtifacts {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            files: Vec::new(),
            summary: String::new(),
        }
    }

    /// Writes the run index; the timestamp lives only here.
    fn finish(mut self, out_dir: &Path) -> Result<Self> {
        let index = out_dir.join(format!("run_{}.json", self.command));
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let body = serde_json::json!({ "command": self.command, "created_unix": created, "files": self.files, "summary": self.summary });
        write_text(&index, &serde_json::to_string_pretty(&body).expect("json"))?;
        self.files.push(index);
        Ok(self)
    }
}

pub fn prepared_manifest_path(out: &Path) -> PathBuf {
    out.join("prepared").join("manifest.csv")
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    out.join("train").join("best.weights")
}

pub fn history_path(out: &Path) -> PathBuf {
    out.join("train").join("history.jsonl")
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent() {
        mkdir(d)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value).map_err(|e| Error::numeric(e.to_string()))?)
}

fn require_images(entries: &[ManifestEntry]) -> Result<()> {
    for e in entries {
        if !e.image_path.is_file() {
            return Err(Error::io(&e.image_path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
    }
    Ok(())
}

fn absolute(mut entries: Vec<ManifestEntry>) -> Result<Vec<ManifestEntry>> {
    for e in &mut entries {
        e.image_path = std::path::absolute(&e.image_path).map_err(|err| Error::io(&e.image_path, err))?;
    }
    Ok(entries)
}

/// Split, optional merge, and augmentation of the training partition.
///
/// Originals keep their image paths; each augmented variant is written to
/// `prepared/images/<id>.png`. Variant `v` of entry `id` uses stream
/// `augment/<id>`, so output is independent of scheduling.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let manifest = cfg
        .data
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("data.manifest is required for prepare".into()))?;
    let entries = absolute(load_manifest(manifest)?)?;
    require_images(&entries)?;
    let mut split = stratified_split(&entries, cfg.data.fractions, &RngState::new(cfg.seed, "split"))?;
    if let Some(m) = &cfg.data.merge {
        split = selective_merge(&split, m)?;
        split.train = absolute(std::mem::take(&mut split.train))?;
        require_images(&split.train)?;
    }
    let plan = plan_selective_augmentation(&split, &cfg.augmentation.classes, cfg.augmentation.multiplier)?;
    log::info!("prepare: {} entries, {} planned training images", entries.len(), plan.len());

    let out = &cfg.out_dir;
    let prep_dir = out.join("prepared");
    let img_dir = prep_dir.join("images");
    mkdir(&img_dir)?;
    let mut groups: Vec<&[PlanItem]> = Vec::new();
    let mut rest = plan.items.as_slice();
    while let Some(first) = rest.first() {
        let n = rest.iter().take_while(|it| it.source.id == first.source.id).count();
        groups.push(&rest[..n]);
        rest = &rest[n..];
    }
    let augment_root = RngState::new(cfg.seed, "augment");
    let produced: Vec<Vec<ManifestEntry>> = groups
        .par_iter()
        .map(|items| {
            let src = &items[0].source;
            let img = if items.iter().any(|it| it.op.is_some()) {
                Some(ImageU8::load_png(&src.image_path)?)
            } else {
                None
            };
            let rng = augment_root.child(&src.id);
            items
                .iter()
                .map(|it| match (&img, it.op) {
                    (Some(img), Some(_)) => {
                        let out_img = variant(img, it.variant, &cfg.augmentation.params, &rng)?;
                        let entry = it.output_entry(PathBuf::new());
                        let path = img_dir.join(format!("{}.png", entry.id.replace(['/', '\\', ':'], "_")));
                        out_img.save_png(&path)?;
                        Ok(it.output_entry(path))
                    }
                    _ => Ok(it.output_entry(it.source.image_path.clone())),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let prepared = SplitManifest {
        train: produced.into_iter().flatten().collect(),
        val: split.val,
        test: split.test,
    };
    let manifest_out = prepared_manifest_path(out);
    save_manifest_rows(&manifest_out, prepared.iter().map(|(e, s)| (e, Some(s))))?;
    let dist = DistributionReport::of(&prepared);
    dist.write(&prep_dir, "distribution")?;

    let mut art = RunArtifacts::new("prepare");
    art.files.push(manifest_out);
    art.files.push(prep_dir.join("distribution.json"));
    for part in ["train", "val", "test"] {
        art.files.push(prep_dir.join(format!("distribution_{part}.svg")));
    }
    art.summary = format!(
        "prepared train={} val={} test={} augmented={}",
        prepared.train.len(),
        prepared.val.len(),
        prepared.test.len(),
        plan.items.iter().filter(|it| it.op.is_some()).count()
    );
    art.finish(out)
}

/// Rows of the prepared manifest grouped by split.
pub fn load_prepared(out: &Path) -> Result<SplitManifest> {
    let path = prepared_manifest_path(out);
    let mut s = SplitManifest::default();
    for row in load_manifest_rows(&path)? {
        let part = row.split.ok_or_else(|| Error::Manifest {
            path: path.clone(),
            line: 0,
            msg: format!("row `{}` has no split", row.entry.id),
        })?;
        s.part_mut(part).push(row.entry);
    }
    Ok(s)
}

fn labeled(cfg: &PipelineConfig, entries: &[ManifestEntry]) -> Result<LabeledImages<f32>> {
    if entries.is_empty() {
        return Err(Error::param("no entries to load"));
    }
    LabeledImages::from_entries(entries, cfg.model.input_size, cfg.train.task == TaskMode::Binary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub best_epoch: usize,
    pub best_val_qwk: f64,
    pub epochs: usize,
    pub history: Vec<EpochRecord>,
    pub best_metrics: Option<MetricsReport>,
}

/// Fits on the prepared train split, checkpointing on validation QWK.
/// History lines already written are kept if training aborts.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let prepared = load_prepared(out)?;
    let train = labeled(cfg, &prepared.train)?;
    let val = labeled(cfg, &prepared.val)?;
    let mut model = DualBranchModel::<f32>::build(&cfg.model, cfg.seed)?;
    let dir = out.join("train");
    mkdir(&dir)?;
    write_json(&dir.join("config.json"), cfg)?;
    let opts = FitOptions {
        checkpoint: Some(checkpoint_path(out)),
        history: Some(history_path(out)),
    };
    let res = fit(&mut model, &train, &val, &cfg.train, &opts).map_err(|f| {
        log::error!("training stopped after {} completed epochs", f.history.len());
        f.error
    })?;
    let summary = TrainSummary {
        best_epoch: res.best.epoch,
        best_val_qwk: res.best.val_qwk,
        epochs: res.history.len(),
        history: res.history,
        best_metrics: res.best.metrics,
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    let mut art = RunArtifacts::new("train");
    art.files = vec![checkpoint_path(out), history_path(out), summary_path, dir.join("config.json")];
    art.summary = format!("best_epoch={} best_val_qwk={:.6}", summary.best_epoch, summary.best_val_qwk);
    art.finish(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub roc: MulticlassRoc,
}

fn class_labels(k: usize) -> Vec<String> {
    if k == GRADE_NAMES.len() {
        GRADE_NAMES.iter().map(|s| s.to_string()).collect()
    } else if k == 2 {
        vec!["non-referable".into(), "referable".into()]
    } else {
        (0..k).map(|i| i.to_string()).collect()
    }
}

/// Metrics, prediction dump and plots for row-major `[n, k]` probabilities.
pub fn evaluate_predictions(
    cfg: &PipelineConfig,
    ids: &[String],
    truths: &[usize],
    probs: &[f64],
    k: usize,
    dir: &Path,
) -> Result<Evaluation> {
    if ids.len() != truths.len() || probs.len() != truths.len() * k {
        return Err(Error::param("prediction dump sizes disagree"));
    }
    mkdir(dir)?;
    let preds = argmax_rows(probs, k);
    let cm = ConfusionMatrix::from_labels(truths, &preds, k)?;
    let mut report = per_class_report_with(&cm, cfg.eval.specificity)?;
    let roc = one_vs_rest_roc(probs, truths, k, cfg.eval.auc_average)?;
    report.attach_roc(&roc);
    write_json(&dir.join("metrics.json"), &report)?;

    let mut w = csv::Writer::from_path(dir.join("predictions.csv")).map_err(|e| Error::Config(e.to_string()))?;
    let mut header = vec!["id".to_string(), "truth".into(), "prediction".into()];
    header.extend((0..k).map(|j| format!("p{j}")));
    let io = |e: csv::Error| Error::io(dir.join("predictions.csv"), std::io::Error::other(e.to_string()));
    w.write_record(&header).map_err(io)?;
    for i in 0..ids.len() {
        let mut rec = vec![ids[i].clone(), truths[i].to_string(), preds[i].to_string()];
        rec.extend(probs[i * k..(i + 1) * k].iter().map(|p| p.to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("predictions.csv"), e))?;

    let mut roc_csv = String::from("class,threshold,fpr,tpr\n");
    let labels = class_labels(k);
    let mut series = Vec::new();
    for (c, curve) in roc.per_class.iter().enumerate() {
        let Some(curve) = curve else { continue };
        for p in &curve.points {
            roc_csv.push_str(&format!("{c},{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        series.push(Series {
            label: format!("{} (AUC {:.3})", labels[c], roc.per_class_auc[c].unwrap_or(f64::NAN)),
            points: curve.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
        });
    }
    write_text(&dir.join("roc.csv"), &roc_csv)?;
    let title = format!("ROC (overall AUC {:.3})", roc.overall_auc);
    write_text(
        &dir.join("roc.svg"),
        &line_plot(&title, &series, (0.0, 1.0), (0.0, 1.0), ("false positive rate", "true positive rate"), true),
    )?;
    write_text(
        &dir.join("confusion.svg"),
        &heatmap("Confusion matrix", &labels, cm.counts(), "predicted", "true"),
    )?;
    Ok(Evaluation { report, roc })
}

/// Eval-mode inference of a checkpoint on a manifest (its test rows when the
/// manifest has a split column, else every row).
pub fn cmd_evaluate(cfg: &PipelineConfig, checkpoint: Option<&Path>, manifest: Option<&Path>) -> Result<RunArtifacts> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let ckpt = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| checkpoint_path(out));
    let mpath = manifest.map(Path::to_path_buf).unwrap_or_else(|| prepared_manifest_path(out));
    let rows = load_manifest_rows(&mpath)?;
    let has_split = rows.iter().any(|r| r.split.is_some());
    let entries: Vec<ManifestEntry> = rows
        .into_iter()
        .filter(|r| !has_split || r.split == Some(Split::Test))
        .map(|r| r.entry)
        .collect();
    if entries.is_empty() {
        return Err(Error::param(format!("{}: no test rows", mpath.display())));
    }
    let mut model = DualBranchModel::<f32>::load(&cfg.model, &ckpt)?;
    let data = labeled(cfg, &entries)?;
    let probs = model.predict_proba(&data.images, cfg.train.eval_batch)?;
    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    let dir = out.join("evaluate");
    let ev = evaluate_predictions(cfg, &ids, &data.labels, &probs, model.classes(), &dir)?;
    let mut art = RunArtifacts::new("evaluate");
    for f in ["metrics.json", "predictions.csv", "roc.csv", "roc.svg", "confusion.svg"] {
        art.files.push(dir.join(f));
    }
    let o = &ev.report.overall;
    art.summary = format!(
        "samples={} accuracy={:.6} qwk={} auc={:.6}",
        ev.report.samples,
        o.accuracy,
        o.qwk.map_or("undefined".into(), |q| format!("{q:.6}")),
        ev.roc.overall_auc
    );
    art.finish(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub path: PathBuf,
    pub class: usize,
    pub probabilities: Vec<f64>,
}

/// Per-image results in input order. Fails only when every image fails.
pub fn cmd_predict(cfg: &PipelineConfig, checkpoint: Option<&Path>, images: &[PathBuf]) -> Result<Vec<Result<Prediction>>> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::param("no images given"));
    }
    let ckpt = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| checkpoint_path(&cfg.out_dir));
    let mut model = DualBranchModel::<f32>::load(&cfg.model, &ckpt)?;
    let [h, w] = cfg.model.input_size;
    let k = model.classes();
    let mut results = Vec::with_capacity(images.len());
    for p in images {
        let r = (|| {
            let img = ImageU8::load_png(p)?;
            let img = if img.height() == h && img.width() == w { img } else { resize_bilinear(&img, h, w)? };
            let x = img.to_chw::<f32>().reshape(&[1, 3, h, w])?;
            let probs = model.predict_proba(&x, 1)?;
            Ok(Prediction {
                path: p.clone(),
                class: argmax_rows(&probs, k)[0],
                probabilities: probs,
            })
        })();
        results.push(r);
    }
    if results.iter().all(|r| r.is_err()) {
        return Err(results.into_iter().find_map(|r| r.err()).expect("nonempty"));
    }
    Ok(results)
}

/// GP search over (lr, momentum). With `stub` the objective is the quadratic
/// bowl centred on the default hyperparameters; otherwise each trial trains
/// for `tune.epochs` and scores best validation QWK.
pub fn cmd_tune(cfg: &PipelineConfig, stub: bool) -> Result<RunArtifacts> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let rng = RngState::new(cfg.seed, "tune");
    let result: TuneResult = if stub {
        let d = TrainConfig::default();
        gp_tune(&cfg.tune.space, quadratic_objective((d.lr, d.momentum)), &rng)?
    } else {
        let prepared = load_prepared(out)?;
        let train = labeled(cfg, &prepared.train)?;
        let val = labeled(cfg, &prepared.val)?;
        gp_tune(
            &cfg.tune.space,
            |lr, momentum| {
                let tc = TrainConfig {
                    epochs: cfg.tune.epochs,
                    lr,
                    momentum,
                    ..cfg.train.clone()
                };
                let mut model = DualBranchModel::<f32>::build(&cfg.model, cfg.seed)?;
                let r = fit(&mut model, &train, &val, &tc, &FitOptions::default())?;
                Ok(r.best.val_qwk)
            },
            &rng,
        )?
    };
    let dir = out.join("tune");
    let mut csv = String::from("index,source,lr,momentum,score,incumbent\n");
    for t in &result.trace {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let source = match t.source {
            crate::train::TrialSource::LatinHypercube => "latin_hypercube",
            crate::train::TrialSource::ExpectedImprovement => "expected_improvement",
        };
        csv.push_str(&format!("{},{source},{},{},{},{}\n", t.index, t.lr, t.momentum, opt(t.score), opt(t.incumbent)));
    }
    write_text(&dir.join("trace.csv"), &csv)?;
    write_json(&dir.join("best.json"), &result)?;
    let mut art = RunArtifacts::new("tune");
    art.files = vec![dir.join("trace.csv"), dir.join("best.json")];
    art.summary = format!(
        "best_lr={:.6} best_momentum={:.6} best_score={:.6} trials={}",
        result.best_lr,
        result.best_momentum,
        result.best_score,
        result.trace.len()
    );
    art.finish(out)
}

fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Config(format!("{}: {e}", path.display()))))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("absent".into(), |x| format!("{x:.4}"))
}

/// Markdown summary and training curves from whatever artifacts exist.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let dir = out.join("report");
    let mut md = String::from("# Run report\n");
    let mut art = RunArtifacts::new("report");
    let mut sections = 0;

    let dist_path = out.join("prepared").join("distribution.json");
    if dist_path.is_file() {
        let text = std::fs::read_to_string(&dist_path).map_err(|e| Error::io(&dist_path, e))?;
        let dist: DistributionReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        md.push_str("\n## Class distribution\n\n| split |");
        for n in GRADE_NAMES {
            md.push_str(&format!(" {n} |"));
        }
        md.push_str(" total |\n|---|---|---|---|---|---|---|\n");
        for (name, h) in [("train", &dist.train), ("val", &dist.val), ("test", &dist.test)] {
            md.push_str(&format!("| {name} |"));
            for c in h.grades {
                md.push_str(&format!(" {c} |"));
            }
            md.push_str(&format!(" {} |\n", h.total()));
        }
        sections += 1;
    }

    let hist_path = history_path(out);
    if hist_path.is_file() {
        let hist = read_history(&hist_path)?;
        let pts = |f: fn(&EpochRecord) -> f64| hist.iter().map(|r| (r.epoch as f64, f(r))).collect::<Vec<_>>();
        let xr = (1.0, hist.len().max(2) as f64);
        let (lo, hi) = hist
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.loss), b.max(r.loss)));
        let loss = Series { label: "train loss".into(), points: pts(|r| r.loss) };
        write_text(&dir.join("loss.svg"), &line_plot("Training loss", &[loss], xr, (lo.min(0.0), hi.max(lo + 1e-9)), ("epoch", "loss"), false))?;
        let series = [
            Series { label: "val QWK".into(), points: pts(|r| r.val_qwk) },
            Series { label: "val accuracy".into(), points: pts(|r| r.val_accuracy) },
            Series { label: "train accuracy".into(), points: pts(|r| r.train_accuracy) },
        ];
        write_text(&dir.join("validation.svg"), &line_plot("Validation", &series, xr, (0.0, 1.0), ("epoch", "score"), false))?;
        art.files.push(dir.join("loss.svg"));
        art.files.push(dir.join("validation.svg"));
        md.push_str("\n## Training\n\n| epoch | loss | train acc | val QWK | val acc |\n|---|---|---|---|---|\n");
        for r in &hist {
            md.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                r.epoch, r.loss, r.train_accuracy, r.val_qwk, r.val_accuracy
            ));
        }
        if let Some(best) = hist.iter().fold(None::<&EpochRecord>, |b, r| match b {
            Some(b) if b.val_qwk >= r.val_qwk => Some(b),
            _ => Some(r),
        }) {
            md.push_str(&format!("\nBest epoch {} with validation QWK {:.4}.\n", best.epoch, best.val_qwk));
        }
        sections += 1;
    }

    let metrics_path = out.join("evaluate").join("metrics.json");
    if metrics_path.is_file() {
        let text = std::fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        let rep: MetricsReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let labels = class_labels(rep.k);
        md.push_str("\n## Test metrics\n\n| class | support | precision | sensitivity | specificity | F1 | AUC |\n|---|---|---|---|---|---|---|\n");
        for c in &rep.per_class {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} |\n",
                labels[c.class],
                c.support,
                fmt_opt(c.rates.precision),
                fmt_opt(c.rates.sensitivity),
                fmt_opt(c.rates.specificity),
                fmt_opt(c.rates.f1),
                fmt_opt(c.auc)
            ));
        }
        let o = &rep.overall;
        md.push_str(&format!(
            "| weighted | {} | {} | {} | {} | {} | {} |\n\nAccuracy {:.4}, QWK {}.\n",
            rep.samples,
            fmt_opt(o.precision),
            fmt_opt(o.sensitivity),
            fmt_opt(o.specificity),
            fmt_opt(o.f1),
            fmt_opt(o.auc),
            o.accuracy,
            fmt_opt(o.qwk)
        ));
        for note in &rep.absent {
            md.push_str(&format!("\n- {note}"));
        }
        sections += 1;
    }

    let tune_path = out.join("tune").join("best.json");
    if tune_path.is_file() {
        let text = std::fs::read_to_string(&tune_path).map_err(|e| Error::io(&tune_path, e))?;
        let t: TuneResult = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        md.push_str(&format!(
            "\n## Tuning\n\nBest lr {:.5}, momentum {:.4}, score {:.4} after {} trials.\n",
            t.best_lr,
            t.best_momentum,
            t.best_score,
            t.trace.len()
        ));
        sections += 1;
    }

    if sections == 0 {
        return Err(Error::io(out, std::io::Error::new(std::io::ErrorKind::NotFound, "no artifacts to report on")));
    }
    let md_path = dir.join("report.md");
    write_text(&md_path, &md)?;
    art.files.push(md_path);
    art.summary = format!("report sections={sections}");
    art.finish(out)
}

/// Writes a synthetic blob dataset with `counts[g]` images of grade `g` and
/// a manifest at `dir/manifest.csv`.
pub fn cmd_synth(dir: &Path, counts: &[usize], size: usize, seed: u64) -> Result<RunArtifacts> {
    if counts.len() != GRADE_NAMES.len() || size < 4 {
        return Err(Error::param("synth needs five class counts and size >= 4"));
    }
    let img_dir = dir.join("images");
    mkdir(&img_dir)?;
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat_n(g, n)).collect();
    let spec = BlobSpec { size, ..BlobSpec::default() };
    let rng = RngState::new(seed, "synth");
    let entries: Vec<ManifestEntry> = labels
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let id = format!("syn{i:05}");
            let path = img_dir.join(format!("{id}.png"));
            blob_image(g, &spec, &rng.child(i)).save_png(&path)?;
            ManifestEntry::new(id, path, g as u8, "synthetic")
        })
        .collect::<Result<_>>()?;
    let manifest = dir.join("manifest.csv");
    save_manifest_rows(&manifest, entries.iter().map(|e| (e, None)))?;
    let mut per_grade = BTreeMap::new();
    for (g, n) in counts.iter().enumerate() {
        per_grade.insert(GRADE_NAMES[g], *n);
    }
    let mut art = RunArtifacts::new("synth");
    art.files.push(manifest);
    art.summary = format!("synthetic images={} {:?}", entries.len(), per_grade);
    art.finish(dir)
}
