//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{brute_auc, brute_qwk, brute_rates, brute_weighted, check_layer, numeric_grad, projection, random_tensor, rel_err, samples};
use drgrade::augment::{
    clahe, clipped_tile_histograms, expand, hflip, vflip, AugmentKind, AugmentOp, AugmentParams, ImageU8, PixelBasis,
};
use drgrade::dataset::{plan_selective_augmentation, stratified_split, ManifestEntry, SplitFractions};
use drgrade::metrics::{per_class_report, qwk, roc_curve, ConfusionMatrix};
use drgrade::model::weights::encode;
use drgrade::model::{DualBranchModel, ModelConfig};
use drgrade::nn::{BatchNorm, Conv2d, Dropout, LeakyRelu, Layer, Linear, MaxPool2d, Mode, Param, Relu, Tensor};
use drgrade::rng::RngState;
use drgrade::train::{
    cce_loss, cross_entropy, fit, gp_tune, quadratic_objective, synthetic_blobs, BlobSpec, FitOptions, LabeledImages, TrainConfig,
    TuneSpace,
};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn table1_entries() -> Vec<ManifestEntry> {
    let mut v = Vec::new();
    for (g, n) in [1805usize, 370, 999, 193, 295].into_iter().enumerate() {
        for i in 0..n {
            v.push(ManifestEntry::new(format!("{g}_{i:04}"), format!("{g}_{i}.png"), g as u8, "aptos").unwrap());
        }
    }
    v
}

fn c1_split() -> Check {
    let s = stratified_split(&table1_entries(), SplitFractions::default(), &RngState::new(0, "split")).map_err(|e| e.to_string())?;
    let want = [(1264, 180, 361), (259, 37, 74), (701, 99, 199), (136, 19, 38), (207, 29, 59)];
    for (g, w) in want.iter().enumerate() {
        let c = |v: &[ManifestEntry]| v.iter().filter(|e| usize::from(e.grade) == g).count();
        let got = (c(&s.train), c(&s.val), c(&s.test));
        ensure(got == *w, || format!("grade {g}: {got:?} != {w:?}"))?;
    }
    ensure(s.train.len() == 2567, || format!("train {}", s.train.len()))?;
    Ok("15/15 cells, train 2567".into())
}

fn c2_plan() -> Check {
    let s = stratified_split(&table1_entries(), SplitFractions::default(), &RngState::new(0, "split")).map_err(|e| e.to_string())?;
    let all: BTreeSet<u8> = (0..5).collect();
    let sel: BTreeSet<u8> = (1..5).collect();
    let a = plan_selective_augmentation(&s, &all, 10).map_err(|e| e.to_string())?.len();
    let b = plan_selective_augmentation(&s, &sel, 10).map_err(|e| e.to_string())?.len();
    ensure(a == 25670 && b == 14294, || format!("all {a}, selective {b}"))?;
    Ok(format!("all-class {a}, classes 1-4 {b}"))
}

fn c3_metrics() -> Check {
    let mut g = RngState::new(2024, "acceptance/metrics").generator();
    let mut worst = 0.0f64;
    let track = |worst: &mut f64, a: Option<f64>, b: Option<f64>| -> Result<(), String> {
        match (a, b) {
            (Some(x), Some(y)) => *worst = worst.max((x - y).abs()),
            (None, None) => {}
            _ => return Err(format!("definedness differs: {a:?} vs {b:?}")),
        }
        Ok(())
    };
    let cases = 1000;
    for _ in 0..cases {
        let k = g.random_range(2..=6);
        let rows: Vec<Vec<u64>> = (0..k).map(|_| (0..k).map(|_| g.random_range(0..12)).collect()).collect();
        if rows.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        let cm = ConfusionMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let pairs = samples(&rows);
        track(&mut worst, qwk(&cm).ok(), brute_qwk(&pairs, k))?;
        let rep = per_class_report(&cm).map_err(|e| e.to_string())?;
        let supports: Vec<u64> = rows.iter().map(|r| r.iter().sum()).collect();
        let brute: Vec<_> = (0..k).map(|c| brute_rates(&pairs, c)).collect();
        for (m, b) in rep.per_class.iter().zip(&brute) {
            track(&mut worst, m.rates.accuracy, Some(b.accuracy))?;
            track(&mut worst, m.rates.precision, b.precision)?;
            track(&mut worst, m.rates.sensitivity, b.sensitivity)?;
            track(&mut worst, m.rates.specificity, b.specificity)?;
            track(&mut worst, m.rates.f1, b.f1)?;
        }
        let w = |f: fn(&common::BruteRates) -> Option<f64>| brute_weighted(&brute.iter().map(f).collect::<Vec<_>>(), &supports);
        track(&mut worst, rep.overall.precision, w(|b| b.precision))?;
        track(&mut worst, rep.overall.sensitivity, w(|b| b.sensitivity))?;
        track(&mut worst, rep.overall.specificity, w(|b| b.specificity))?;
        track(&mut worst, rep.overall.f1, w(|b| b.f1))?;
    }
    for _ in 0..cases {
        let n = g.random_range(2..120);
        let coarse = g.random_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| if coarse { f64::from(g.random_range(0..8u8)) / 7.0 } else { g.random::<f64>() })
            .collect();
        let mut truths: Vec<bool> = (0..n).map(|_| g.random_bool(0.4)).collect();
        truths[0] = true;
        truths[1] = false;
        let a = roc_curve(&scores, &truths).map_err(|e| e.to_string())?.auc();
        worst = worst.max((a - brute_auc(&scores, &truths)).abs());
    }
    ensure(worst < 1e-12, || format!("max abs diff {worst:e}"))?;
    Ok(format!("{cases} matrices + {cases} score sets, max abs diff {worst:.1e}"))
}

fn c4_binary_rates() -> Check {
    // counts implied by 99.46% sensitivity and 97.51% specificity on the test split
    let (neg, pos): (f64, f64) = (361.0, 74.0 + 199.0 + 38.0 + 59.0);
    let tp = (0.9946 * pos).round() as u64;
    let tn = (0.9751 * neg).round() as u64;
    let (fn_, fp) = (pos as u64 - tp, neg as u64 - tn);
    ensure((tn, fp, fn_, tp) == (352, 9, 2, 368), || format!("reconstructed {tn} {fp} {fn_} {tp}"))?;
    let cm = ConfusionMatrix::from_rows(&[vec![tn, fp], vec![fn_, tp]]).map_err(|e| e.to_string())?;
    let rep = per_class_report(&cm).map_err(|e| e.to_string())?;
    let acc = 100.0 * rep.overall.accuracy;
    let sens = 100.0 * rep.positive_class.and_then(|r| r.sensitivity).ok_or("no sensitivity")?;
    ensure((acc - 98.50).abs() <= 0.01 && (sens - 99.46).abs() <= 0.01, || format!("acc {acc} sens {sens}"))?;
    Ok(format!("accuracy {acc:.4}%, sensitivity {sens:.4}%"))
}

fn c5_gradients() -> Check {
    const H: f64 = 1e-5;
    let mut worst_layer = 0.0f64;
    let mut record = |name: &str, r: common::GradReport| -> Result<(), String> {
        worst_layer = worst_layer.max(r.worst());
        ensure(r.worst() < 1e-4, || format!("{name}: {r:?}"))
    };
    let mut lin = Linear::new(Param::new("w", random_tensor(&[4, 6], 1, 1.0)), Some(Param::new("b", random_tensor(&[4], 2, 1.0))))
        .map_err(|e| e.to_string())?;
    record("linear", check_layer(&mut lin, &random_tensor(&[3, 6], 3, 1.0), &projection(&[3, 4], 4), H, &|_| {}))?;
    let mut conv = Conv2d::new(Param::new("w", random_tensor(&[3, 2, 3, 3], 5, 0.5)), Param::new("b", random_tensor(&[3], 6, 0.5)), 1, 1)
        .map_err(|e| e.to_string())?;
    record("conv2d", check_layer(&mut conv, &random_tensor(&[2, 2, 5, 5], 7, 1.0), &projection(&[2, 3, 5, 5], 8), H, &|_| {}))?;
    let mut pool = MaxPool2d::new(2, 2);
    record(
        "maxpool",
        check_layer::<MaxPool2d>(&mut pool, &random_tensor(&[2, 3, 4, 6], 9, 1.0), &projection(&[2, 3, 2, 3], 10), H, &|_| {}),
    )?;
    let mut bn = BatchNorm::<f64>::new("bn", 3);
    for (i, p) in bn.params_mut().into_iter().enumerate() {
        p.value = random_tensor(&[3], 11 + i as u64, 1.0);
    }
    record("batchnorm", check_layer(&mut bn, &random_tensor(&[4, 3, 2, 2], 13, 2.0), &projection(&[4, 3, 2, 2], 14), H, &|_| {}))?;
    let x = random_tensor(&[4, 5], 15, 1.0);
    record("relu", check_layer(&mut Relu::<f64>::new(), &x, &projection(&[4, 5], 16), H, &|_| {}))?;
    let mut leaky = LeakyRelu::<f64>::new(0.01).map_err(|e| e.to_string())?;
    record("leaky_relu", check_layer(&mut leaky, &x, &projection(&[4, 5], 17), H, &|_| {}))?;
    let mut drop = Dropout::new(0.25, RngState::new(1, "d")).map_err(|e| e.to_string())?;
    record(
        "dropout",
        check_layer(&mut drop, &x, &projection(&[4, 5], 18), H, &|d: &mut Dropout| d.reseed(RngState::new(1, "d"))),
    )?;

    let mut worst_loss = 0.0f64;
    for (k, gamma, seed) in [(5, -1.0, 1u64), (5, 0.0, 2), (3, -0.5, 3), (2, -1.0, 4), (6, 0.7, 5)] {
        let logits = random_tensor(&[6, k], seed, 3.0);
        let t: Vec<usize> = (0..6).map(|i| (i + seed as usize) % k).collect();
        let out = cce_loss(&logits, &t, gamma).map_err(|e| e.to_string())?;
        let num = numeric_grad(&logits.to_f64_vec(), 1e-6, |v| {
            cce_loss(&Tensor::<f64>::from_f64(&[6, k], v).unwrap(), &t, gamma).unwrap().loss
        });
        worst_loss = worst_loss.max(rel_err(&out.grad.to_f64_vec(), &num));
    }
    ensure(worst_loss < 1e-6, || format!("cce rel err {worst_loss:e}"))?;

    let cfg = ModelConfig::tiny(5);
    let mut m = DualBranchModel::<f64>::build(&cfg, 7).map_err(|e| e.to_string())?;
    let xm = random_tensor(&[4, 3, 8, 8], 107, 1.0);
    let t = vec![0, 1, 2, 3];
    let obj = move |y: &Tensor<f64>| {
        let o = cce_loss(y, &t, -1.0).unwrap();
        (o.loss, o.grad)
    };
    let model_err = check_layer(&mut m, &xm, &obj, H, &|_| {}).global;
    ensure(model_err < 1e-3, || format!("model rel err {model_err:e}"))?;
    Ok(format!("layers {worst_layer:.1e}, cce {worst_loss:.1e}, model {model_err:.1e}"))
}

fn c6_degeneracy() -> Check {
    let mut g = RngState::new(6, "acceptance/cce").generator();
    for case in 0..500 {
        let k = g.random_range(2..8);
        let n = g.random_range(1..16);
        let x = random_tensor(&[n, k], case, 6.0);
        let t: Vec<usize> = (0..n).map(|_| g.random_range(0..k)).collect();
        let ce = cross_entropy(&x, &t).map_err(|e| e.to_string())?;
        let zero = cce_loss(&x, &t, 0.0).map_err(|e| e.to_string())?;
        ensure(zero.loss.to_bits() == ce.loss.to_bits() && zero.grad == ce.grad, || format!("gamma 0 case {case}"))?;
        let x2 = random_tensor(&[n, 2], case + 10_000, 6.0);
        let t2: Vec<usize> = t.iter().map(|v| v % 2).collect();
        let ce2 = cross_entropy(&x2, &t2).map_err(|e| e.to_string())?;
        let gamma = g.random_range(-5.0..5.0);
        let b = cce_loss(&x2, &t2, gamma).map_err(|e| e.to_string())?;
        ensure(b.loss.to_bits() == ce2.loss.to_bits() && b.grad == ce2.grad, || format!("K=2 case {case}"))?;
    }
    Ok("500 random batches bitwise equal".into())
}

fn c7_augment() -> Check {
    let mut g = RngState::new(7, "acceptance/augment").generator();
    let identity = AugmentParams::identity();
    let defaults = AugmentParams::default();
    let mut min_share_gap = f64::INFINITY;
    let mut worst_orth = 0.0f64;
    for case in 0..60u64 {
        let (h, w) = (g.random_range(1..40), g.random_range(1..40));
        let img = ImageU8::new(h, w, (0..h * w * 3).map(|_| g.random::<u8>()).collect()).map_err(|e| e.to_string())?;
        ensure(hflip(&hflip(&img)) == img && vflip(&vflip(&img)) == img, || "flip involution".into())?;
        for kind in AugmentKind::ALL {
            if matches!(kind, AugmentKind::HorizontalFlip | AugmentKind::VerticalFlip) {
                continue;
            }
            let out = AugmentOp::draw(kind, &identity, &RngState::new(case, "id"))
                .and_then(|op| op.apply(&img))
                .map_err(|e| e.to_string())?;
            ensure(out == img, || format!("{} not identity at zero strength", kind.name()))?;
        }
        let clip = g.random_range(1.0..5.0);
        let tiles = (g.random_range(1..=h.min(8)), g.random_range(1..=w.min(8)));
        for t in clipped_tile_histograms(&img, clip, tiles).map_err(|e| e.to_string())? {
            for b in t.bins {
                ensure(b <= t.limit + 1e-9, || format!("bin {b} above clip {}", t.limit))?;
                min_share_gap = min_share_gap.min(t.limit + t.share - b);
            }
        }
        clahe(&img, clip, tiles).map_err(|e| e.to_string())?;
        let basis = PixelBasis::of(&img).map_err(|e| e.to_string())?;
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|c| basis.eigenvectors[i][c] * basis.eigenvectors[j][c]).sum();
                worst_orth = worst_orth.max((d - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let rng = RngState::new(case, "augment");
        let a = expand(&img, 10, &defaults, &rng).map_err(|e| e.to_string())?;
        let b = expand(&img, 10, &defaults, &rng).map_err(|e| e.to_string())?;
        ensure(a == b, || "expansion not deterministic".into())?;
    }
    ensure(worst_orth < 1e-6, || format!("PCA orthonormality {worst_orth:e}"))?;
    ensure(min_share_gap >= -1e-9, || "bin above clip + redistribution".into())?;
    Ok(format!(
        "60 images: involution, identity for the 7 parametrised ops, clip bound, orthonormality {worst_orth:.1e}, determinism"
    ))
}

fn c8_training() -> Check {
    let spec = BlobSpec::default();
    let (ti, tl) = synthetic_blobs(500, &spec, &RngState::new(8, "acceptance/train"));
    let (vi, vl) = synthetic_blobs(100, &spec, &RngState::new(8, "acceptance/val"));
    let train = LabeledImages::<f32>::from_images(&ti, tl).map_err(|e| e.to_string())?;
    let val = LabeledImages::<f32>::from_images(&vi, vl).map_err(|e| e.to_string())?;
    let cfg = TrainConfig { seed: 8, ..TrainConfig::default() };
    let mut model = DualBranchModel::<f32>::build(&ModelConfig::default(), 8).map_err(|e| e.to_string())?;
    let r = fit(&mut model, &train, &val, &cfg, &FitOptions::default()).map_err(|f| f.error.to_string())?;
    let max = r.history.iter().map(|h| h.val_qwk).fold(f64::NEG_INFINITY, f64::max);
    ensure(r.history.len() == 30, || format!("{} epochs", r.history.len()))?;
    ensure(r.best.val_qwk == max, || format!("checkpoint {} vs max {max}", r.best.val_qwk))?;
    ensure(r.best.val_qwk >= 0.9, || format!("best val QWK {}", r.best.val_qwk))?;
    Ok(format!("best val QWK {:.4} at epoch {}", r.best.val_qwk, r.best.epoch))
}

fn c9_tuner() -> Check {
    let mut hits = 0;
    let mut dists = Vec::new();
    for seed in 0..10 {
        let r = gp_tune(&TuneSpace::default(), quadratic_objective((0.06, 0.66)), &RngState::new(seed, "tune"))
            .map_err(|e| e.to_string())?;
        ensure(r.trace.len() <= 20, || format!("{} evaluations", r.trace.len()))?;
        let d = ((r.best_lr - 0.06).powi(2) + (r.best_momentum - 0.66).powi(2)).sqrt();
        dists.push(d);
        if d <= 0.01 {
            hits += 1;
        }
    }
    ensure(hits >= 9, || format!("{hits}/10 within 0.01: {dists:?}"))?;
    let worst = dists.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{hits}/10 seeds within 0.01 (worst {worst:.4})"))
}

fn c10_persistence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.weights");
    let cfg = ModelConfig::tiny(5);
    let mut m = DualBranchModel::<f32>::build(&cfg, 10).map_err(|e| e.to_string())?;
    let x = random_tensor(&[6, 3, 8, 8], 10, 1.0).convert::<f32>();
    m.forward(&x, Mode::Train).map_err(|e| e.to_string())?;
    m.save_weights(&path).map_err(|e| e.to_string())?;
    let mut back = DualBranchModel::<f32>::load(&cfg, &path).map_err(|e| e.to_string())?;
    let a = m.forward(&x, Mode::Eval).map_err(|e| e.to_string())?;
    let b = back.forward(&x, Mode::Eval).map_err(|e| e.to_string())?;
    let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&a) == bits(&b), || "reloaded outputs differ".into())?;

    let named = m.named_tensors();
    let refs: Vec<(&str, &Tensor<f32>)> = named.iter().map(|(n, t)| (n.as_str(), *t)).collect();
    let bytes = encode(&refs);
    let mut cases: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut magic = bytes.clone();
    magic[0] ^= 1;
    cases.push(("bad magic", magic));
    cases.push(("truncated", bytes[..bytes.len() - 5].to_vec()));
    let mut trailing = bytes.clone();
    trailing.extend_from_slice(&[1, 2, 3]);
    cases.push(("trailing bytes", trailing));
    let mut rejected = 0;
    for (what, data) in cases {
        std::fs::write(&path, &data).map_err(|e| e.to_string())?;
        match DualBranchModel::<f32>::load(&cfg, &path) {
            Err(drgrade::Error::Weights { tensor, .. }) if !tensor.is_empty() => rejected += 1,
            Err(e) => return Err(format!("{what}: unexpected error {e}")),
            Ok(_) => return Err(format!("{what}: accepted")),
        }
    }
    std::fs::write(&path, &bytes).map_err(|e| e.to_string())?;
    let mut other = cfg.clone();
    other.head.hidden = vec![6, 5, 3];
    match DualBranchModel::<f32>::load(&other, &path) {
        Err(drgrade::Error::Weights { tensor, .. }) if tensor == "head.fc2.weight" => rejected += 1,
        other => return Err(format!("shape mismatch: {:?}", other.err())),
    }
    Ok(format!("bit-identical reload, {rejected}/4 corruptions rejected with tensor names"))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("split reconstruction", c1_split, Duration::from_secs(1)),
        ("augmentation arithmetic", c2_plan, Duration::from_secs(1)),
        ("metrics oracle equivalence", c3_metrics, Duration::from_secs(10)),
        ("binary rate reconstruction", c4_binary_rates, Duration::from_secs(1)),
        ("gradient correctness", c5_gradients, Duration::from_secs(60)),
        ("cce degeneracies", c6_degeneracy, Duration::from_secs(10)),
        ("augmentation invariants", c7_augment, Duration::from_secs(30)),
        ("training smoke", c8_training, Duration::from_secs(600)),
        ("tuner convergence", c9_tuner, Duration::from_secs(30)),
        ("persistence", c10_persistence, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let res = res.and_then(|m| if took <= limit { Ok(m) } else { Err(format!("{m}; took {took:.2?} > {limit:?}")) });
        match res {
            Ok(m) => println!("PASS {:>2} {name}: {m} ({took:.2?})", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {m} ({took:.2?})", i + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
