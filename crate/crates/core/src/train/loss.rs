use crate::error::{Error, Result};
use crate::nn::{softmax_rows, Scalar, Tensor};

/// Samples whose true-class probability is within this of 1 skip the complement term.
pub const COMPLEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LossOutput<S: Scalar> {
    pub loss: f64,
    /// Mean cross-entropy part.
    pub ce: f64,
    /// Mean complement entropy `H_c` over samples (unscaled).
    pub complement_entropy: f64,
    /// Gradient of `loss` wrt the logits.
    pub grad: Tensor<S>,
    pub probs: Vec<f64>,
}

/// Complement cross-entropy: `CE + gamma/(K-1) · mean_i H_c(i)`.
///
/// `H_c = -Σ_{j≠g} p̃_j ln p̃_j` with `p̃` the softmax over the non-target
/// logits, so `∂H_c/∂z_g = 0` and `∂H_c/∂z_k = -p̃_k (ln p̃_k + H_c)` otherwise.
/// With `gamma == 0` or `K == 2` the complement term is never computed.
pub fn cce_loss<S: Scalar>(logits: &Tensor<S>, targets: &[usize], gamma: f64) -> Result<LossOutput<S>> {
    let s = logits.shape();
    if s.len() != 2 || s[1] < 2 {
        return Err(Error::param(format!("loss expects [N,K>=2] logits, got {s:?}")));
    }
    let (n, k) = (s[0], s[1]);
    if targets.len() != n || n == 0 {
        return Err(Error::param(format!("{} targets for {n} logit rows", targets.len())));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::param(format!("target {t} out of range for {k} classes")));
    }
    if !gamma.is_finite() {
        return Err(Error::param("gamma must be finite"));
    }
    logits.check_finite("logits")?;
    let z = logits.to_f64_vec();
    let probs = softmax_rows(&z, k);
    let inv_n = 1.0 / n as f64;
    let mut ce = 0.0;
    let mut grad = vec![0.0; n * k];
    for i in 0..n {
        let g = targets[i];
        let row = &probs[i * k..(i + 1) * k];
        // log-sum-exp form keeps CE finite when the target probability underflows
        let zr = &z[i * k..(i + 1) * k];
        let m = zr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + zr.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
        ce += lse - zr[g];
        for j in 0..k {
            let d = if j == g { row[j] - 1.0 } else { row[j] };
            grad[i * k + j] = d * inv_n;
        }
    }
    ce *= inv_n;
    let mut hc_mean = 0.0;
    let mut loss = ce;
    // with K = 2 the complement is a point mass and H_c = 0
    if gamma != 0.0 && k > 2 {
        let coef = gamma / (k - 1) as f64;
        let mut hc_sum = 0.0;
        for i in 0..n {
            let g = targets[i];
            if 1.0 - probs[i * k + g] < COMPLEMENT_EPS {
                continue;
            }
            let zr = &z[i * k..(i + 1) * k];
            let m = (0..k).filter(|&j| j != g).map(|j| zr[j]).fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = (0..k).filter(|&j| j != g).map(|j| (zr[j] - m).exp()).sum();
            let ln_denom = denom.ln();
            let mut h = 0.0;
            let mut logp = vec![0.0; k];
            for j in (0..k).filter(|&j| j != g) {
                logp[j] = zr[j] - m - ln_denom;
                h -= logp[j].exp() * logp[j];
            }
            hc_sum += h;
            for j in (0..k).filter(|&j| j != g) {
                let dh = -logp[j].exp() * (logp[j] + h);
                grad[i * k + j] += coef * dh * inv_n;
            }
        }
        hc_mean = hc_sum * inv_n;
        loss = ce + coef * hc_mean;
    }
    if !loss.is_finite() {
        return Err(Error::numeric("non-finite loss"));
    }
    Ok(LossOutput {
        loss,
        ce,
        complement_entropy: hc_mean,
        grad: Tensor::from_f64(s, &grad)?,
        probs,
    })
}

pub fn cross_entropy<S: Scalar>(logits: &Tensor<S>, targets: &[usize]) -> Result<LossOutput<S>> {
    cce_loss(logits, targets, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: usize, k: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(&[n, k], v).unwrap()
    }

    #[test]
    fn uniform_logits_ln_k() {
        let out = cce_loss(&t(1, 5, &[0.3; 5]), &[2], 0.0).unwrap();
        assert!((out.loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_k3() {
        // logits [1,2,3], target 0, gamma -1.
        let z = [1.0f64, 2.0, 3.0];
        let lse = (z.iter().map(|v| v.exp()).sum::<f64>()).ln();
        let ce = lse - 1.0;
        let (a, b) = (2f64.exp(), 3f64.exp());
        let (pa, pb) = (a / (a + b), b / (a + b));
        let h = -(pa * pa.ln() + pb * pb.ln());
        let expect = ce - 0.5 * h;
        let out = cce_loss(&t(1, 3, &z), &[0], -1.0).unwrap();
        assert!((out.loss - expect).abs() < 1e-14);
    }

    #[test]
    fn binary_complement_vanishes() {
        let x = t(2, 2, &[0.1, -2.0, 3.0, 0.4]);
        let a = cce_loss(&x, &[0, 1], -1.0).unwrap();
        let b = cce_loss(&x, &[0, 1], 0.0).unwrap();
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn saturated_target_is_guarded() {
        let out = cce_loss(&t(1, 3, &[100.0, 0.0, 0.0]), &[0], -1.0).unwrap();
        assert_eq!(out.complement_entropy, 0.0);
        assert!(out.loss.is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(cce_loss(&t(1, 3, &[f64::NAN, 0.0, 0.0]), &[0], -1.0).is_err());
        assert!(cce_loss(&t(1, 3, &[0.0; 3]), &[3], -1.0).is_err());
        assert!(cce_loss(&t(1, 1, &[0.0]), &[0], -1.0).is_err());
    }
}
