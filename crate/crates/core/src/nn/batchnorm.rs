use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over `[N, C, ...]` inputs.
///
/// Train mode normalizes with the biased batch variance and folds the batch
/// statistics into the running estimates (`running = (1-m)·running + m·batch`,
/// unbiased variance). Eval mode normalizes with the running estimates.
#[derive(Debug, Clone)]
pub struct BatchNorm<S: Scalar = f32> {
    pub gamma: Param<S>,
    pub beta: Param<S>,
    pub running_mean: Tensor<S>,
    pub running_var: Tensor<S>,
    mean_name: String,
    var_name: String,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// `(n, channels, spatial)` view of an `[N, C, ...]` shape.
fn layout(shape: &[usize]) -> Result<(usize, usize, usize)> {
    if shape.len() < 2 {
        return Err(Error::param(format!("batchnorm expects [N,C,...], got {shape:?}")));
    }
    Ok((shape[0], shape[1], shape[2..].iter().product()))
}

impl<S: Scalar> BatchNorm<S> {
    pub fn new(prefix: &str, channels: usize) -> Self {
        Self {
            gamma: Param::new(format!("{prefix}.gamma"), Tensor::full(&[channels], 1.0)),
            beta: Param::new(format!("{prefix}.beta"), Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
            mean_name: format!("{prefix}.running_mean"),
            var_name: format!("{prefix}.running_var"),
            momentum: DEFAULT_MOMENTUM,
            eps: DEFAULT_EPS,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.shape()[0]
    }
}

impl<S: Scalar> Layer<S> for BatchNorm<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let (n, c, sp) = layout(x.shape())?;
        if c != self.channels() {
            return Err(Error::param(format!(
                "`{}` expects {} channels, got {c}",
                self.gamma.name,
                self.channels()
            )));
        }
        let m = n * sp;
        if mode == Mode::Train && m < 2 {
            return Err(Error::numeric(format!(
                "`{}`: batch variance undefined with {m} element per channel",
                self.gamma.name
            )));
        }
        let xd = x.data();
        let gamma = self.gamma.value.to_f64_vec();
        let beta = self.beta.value.to_f64_vec();
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        if mode == Mode::Train {
            for ch in 0..c {
                let mut s = 0.0;
                for b in 0..n {
                    s += xd[(b * c + ch) * sp..][..sp].iter().map(|v| v.to_f64()).sum::<f64>();
                }
                mean[ch] = s / m as f64;
                let mut q = 0.0;
                for b in 0..n {
                    q += xd[(b * c + ch) * sp..][..sp]
                        .iter()
                        .map(|v| (v.to_f64() - mean[ch]).powi(2))
                        .sum::<f64>();
                }
                var[ch] = q / m as f64;
            }
            let unbias = m as f64 / (m as f64 - 1.0);
            let mo = self.momentum;
            for ch in 0..c {
                let rm = &mut self.running_mean.data_mut()[ch];
                *rm = S::from_f64((1.0 - mo) * rm.to_f64() + mo * mean[ch]);
                let rv = &mut self.running_var.data_mut()[ch];
                *rv = S::from_f64((1.0 - mo) * rv.to_f64() + mo * var[ch] * unbias);
            }
        } else {
            mean = self.running_mean.to_f64_vec();
            var = self.running_var.to_f64_vec();
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = vec![0.0; xd.len()];
        let mut out = Vec::with_capacity(xd.len());
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * sp;
                for i in off..off + sp {
                    let h = (xd[i].to_f64() - mean[ch]) * inv_std[ch];
                    xhat[i] = h;
                    out.push(S::from_f64(gamma[ch] * h + beta[ch]));
                }
            }
        }
        self.cache = (mode == Mode::Train).then(|| BnCache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param(format!("`{}` backward without train forward", self.gamma.name)))?;
        if grad.shape() != cache.shape.as_slice() {
            return Err(Error::param("batchnorm grad shape mismatch"));
        }
        let (n, c, sp) = layout(&cache.shape)?;
        let m = (n * sp) as f64;
        let gd = grad.data();
        let gamma = self.gamma.value.to_f64_vec();
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * sp;
                for i in off..off + sp {
                    let g = gd[i].to_f64();
                    dgamma[ch] += g * cache.xhat[i];
                    dbeta[ch] += g;
                }
            }
        }
        let mut dx = vec![0.0; gd.len()];
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * sp;
                for i in off..off + sp {
                    let g = gd[i].to_f64();
                    // d xhat = g·gamma; its sums are gamma·dbeta and gamma·dgamma
                    dx[i] = gamma[ch] * cache.inv_std[ch] / m
                        * (m * g - dbeta[ch] - cache.xhat[i] * dgamma[ch]);
                }
            }
        }
        self.gamma.accumulate(&dgamma);
        self.beta.accumulate(&dbeta);
        Tensor::new(cache.shape.clone(), dx.into_iter().map(S::from_f64).collect())
    }

    fn params(&self) -> Vec<&Param<S>> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<(&str, &Tensor<S>)> {
        vec![(&self.mean_name, &self.running_mean), (&self.var_name, &self.running_var)]
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<S>)> {
        vec![
            (&self.mean_name, &mut self.running_mean),
            (&self.var_name, &mut self.running_var),
        ]
    }
}
