use super::ConfusionMatrix;
use crate::error::{Error, Result};

/// Quadratic disagreement weights `W_ij = (i-j)² / (k-1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaWeights {
    k: usize,
    w: Vec<f64>,
}

impl KappaWeights {
    pub fn quadratic(k: usize) -> Self {
        let d = ((k.max(2) - 1) * (k.max(2) - 1)) as f64;
        let w = (0..k * k)
            .map(|idx| {
                let (i, j) = (idx / k, idx % k);
                let diff = i as f64 - j as f64;
                diff * diff / d
            })
            .collect();
        Self { k, w }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }
}

/// Quadratic weighted kappa, `1 − ΣW·O / ΣW·E` with `E_ij = row_i·col_j / N`.
///
/// For `k = 2` the quadratic weights coincide with the unweighted ones, so
/// this is plain Cohen's kappa. Undefined (`ΣW·E = 0`) when both raters put
/// all mass on a single class.
pub fn qwk(cm: &ConfusionMatrix) -> Result<f64> {
    let k = cm.k();
    let n = cm.total() as f64;
    if n == 0.0 {
        return Err(Error::numeric("kappa of an empty confusion matrix"));
    }
    let w = KappaWeights::quadratic(k);
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        for j in 0..k {
            let wij = w.get(i, j);
            num += wij * cm.get(i, j) as f64;
            den += wij * rows[i] as f64 * cols[j] as f64 / n;
        }
    }
    if den == 0.0 {
        return Err(Error::numeric(
            "kappa undefined: both raters assign every sample to one class",
        ));
    }
    Ok(1.0 - num / den)
}
