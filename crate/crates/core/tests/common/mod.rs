//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use drgrade::nn::{Layer, Mode, Tensor};
use drgrade::rng::RngState;
use rand::Rng;

pub fn random_tensor(shape: &[usize], seed: u64, scale: f64) -> Tensor<f64> {
    let mut g = RngState::new(seed, "tensor").generator();
    let n: usize = shape.iter().product();
    let v: Vec<f64> = (0..n).map(|_| g.random_range(-scale..scale)).collect();
    Tensor::from_f64(shape, &v).unwrap()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d = na.max(nb);
    if d == 0.0 {
        0.0
    } else {
        diff / d
    }
}

/// Central difference of a scalar function of a flat vector.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + h;
            let up = f(&v);
            v[i] = orig - h;
            let down = f(&v);
            v[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Objective on a layer output: value and its gradient.
pub type Objective<'a> = dyn Fn(&Tensor<f64>) -> (f64, Tensor<f64>) + 'a;

/// Random linear projection `Σ w ⊙ y`.
pub fn projection(shape: &[usize], seed: u64) -> impl Fn(&Tensor<f64>) -> (f64, Tensor<f64>) {
    let w = random_tensor(shape, seed ^ 0x5eed, 1.0);
    move |y: &Tensor<f64>| {
        let v = y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum();
        (v, w.clone())
    }
}

#[derive(Debug)]
pub struct GradReport {
    pub input: f64,
    /// Relative error per parameter name.
    pub params: Vec<(String, f64)>,
    /// Relative error of all gradients concatenated.
    pub global: f64,
}

impl GradReport {
    pub fn worst(&self) -> f64 {
        self.params.iter().map(|p| p.1).fold(self.input, f64::max)
    }
}

/// Compares analytic input and parameter gradients of `layer` (train mode)
/// with central differences. `prep` runs before every forward pass.
pub fn check_layer<L: Layer<f64>>(
    layer: &mut L,
    x: &Tensor<f64>,
    objective: &Objective<'_>,
    h: f64,
    prep: &dyn Fn(&mut L),
) -> GradReport {
    prep(layer);
    for p in layer.params_mut() {
        p.zero_grad();
    }
    let y = layer.forward(x, Mode::Train).unwrap();
    let (_, gy) = objective(&y);
    let dx = layer.backward(&gy).unwrap();
    let analytic_params: Vec<(String, Vec<f64>)> =
        layer.params().iter().map(|p| (p.name.clone(), p.grad.to_f64_vec())).collect();

    let shape = x.shape().to_vec();
    let num_dx = numeric_grad(&x.to_f64_vec(), h, |v| {
        prep(layer);
        let xt = Tensor::from_f64(&shape, v).unwrap();
        objective(&layer.forward(&xt, Mode::Train).unwrap()).0
    });
    let input = rel_err(&dx.to_f64_vec(), &num_dx);
    let mut all_a = dx.to_f64_vec();
    let mut all_n = num_dx;

    let mut params = Vec::new();
    for (pi, (name, analytic)) in analytic_params.iter().enumerate() {
        let base = layer.params()[pi].value.to_f64_vec();
        let num = numeric_grad(&base, h, |v| {
            layer.params_mut()[pi].value.data_mut().copy_from_slice(v);
            prep(layer);
            objective(&layer.forward(x, Mode::Train).unwrap()).0
        });
        layer.params_mut()[pi].value.data_mut().copy_from_slice(&base);
        params.push((name.clone(), rel_err(analytic, &num)));
        all_a.extend_from_slice(analytic);
        all_n.extend(num);
    }
    GradReport {
        input,
        params,
        global: rel_err(&all_a, &all_n),
    }
}

/// Expands a confusion matrix into per-sample (truth, prediction) pairs.
pub fn samples(rows: &[Vec<u64>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            out.extend(std::iter::repeat_n((i, j), c as usize));
        }
    }
    out
}

/// Kappa from every (truth, prediction) pairing of the sample list.
pub fn brute_qwk(pairs: &[(usize, usize)], k: usize) -> Option<f64> {
    let w = |i: usize, j: usize| ((i as f64 - j as f64) / (k as f64 - 1.0)).powi(2);
    let n = pairs.len() as f64;
    let observed: f64 = pairs.iter().map(|&(t, p)| w(t, p)).sum();
    let mut chance = 0.0;
    for &(t, _) in pairs {
        for &(_, p) in pairs {
            chance += w(t, p);
        }
    }
    chance /= n;
    (chance != 0.0).then(|| 1.0 - observed / chance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteRates {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

/// One-vs-rest rates by counting samples directly.
pub fn brute_rates(pairs: &[(usize, usize)], class: usize) -> BruteRates {
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for &(t, p) in pairs {
        match (t == class, p == class) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let div = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
    let precision = div(tp, tp + fp);
    let sensitivity = div(tp, tp + fn_);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    BruteRates {
        accuracy: (tp + tn) as f64 / pairs.len() as f64,
        precision,
        sensitivity,
        specificity: div(tn, tn + fp),
        f1,
    }
}

/// Support-weighted mean over classes where the rate exists.
pub fn brute_weighted(values: &[Option<f64>], supports: &[u64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, &s) in values.iter().zip(supports) {
        if let Some(v) = v {
            num += v * s as f64;
            den += s as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Mann-Whitney AUC: fraction of positive/negative pairs ranked correctly, ties count half.
pub fn brute_auc(scores: &[f64], truths: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !truths[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if truths[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
