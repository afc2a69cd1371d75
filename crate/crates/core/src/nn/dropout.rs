use rand::Rng;

use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::RngState;

/// Inverted dropout: survivors are scaled by `1/(1-rate)` so eval is a no-op.
///
/// Returns the output and the per-element multiplier (0 or `1/(1-rate)`).
pub fn dropout_forward<S: Scalar>(
    input: &Tensor<S>,
    rate: f64,
    rng: &RngState,
    mode: Mode,
) -> Result<(Tensor<S>, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::param(format!("dropout rate {rate} outside [0,1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut gen = rng.generator();
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if gen.random::<f64>() < rate { 0.0 } else { scale })
        .collect();
    let data = input
        .data()
        .iter()
        .zip(&mask)
        .map(|(v, m)| S::from_f64(v.to_f64() * m))
        .collect();
    Ok((Tensor::new(input.shape().to_vec(), data)?, Some(mask)))
}

/// Dropout layer drawing a fresh mask per train-mode call from
/// `rng/<call index>`.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    rng: RngState,
    calls: u64,
    mask: Option<Option<Vec<f64>>>,
}

impl Dropout {
    pub fn new(rate: f64, rng: RngState) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::param(format!("dropout rate {rate} outside [0,1)")));
        }
        Ok(Self {
            rate,
            rng,
            calls: 0,
            mask: None,
        })
    }

    /// Restart the mask sequence, e.g. when reseeding a run.
    pub fn reseed(&mut self, rng: RngState) {
        self.rng = rng;
        self.calls = 0;
    }
}

impl<S: Scalar> Layer<S> for Dropout {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let stream = self.rng.child(self.calls);
        if mode == Mode::Train {
            self.calls += 1;
        }
        let (y, mask) = dropout_forward(x, self.rate, &stream, mode)?;
        self.mask = (mode == Mode::Train).then_some(mask);
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        match &self.mask {
            None => Err(Error::param("dropout backward without train forward")),
            Some(None) => Ok(grad.clone()),
            Some(Some(m)) => {
                if m.len() != grad.len() {
                    return Err(Error::param("dropout grad shape mismatch"));
                }
                Ok(grad.map_with(m, |g, k| g * k))
            }
        }
    }

    fn params(&self) -> Vec<&Param<S>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        Vec::new()
    }
}

impl<S: Scalar> Tensor<S> {
    fn map_with(&self, other: &[f64], f: impl Fn(f64, f64) -> f64) -> Tensor<S> {
        let data = self
            .data()
            .iter()
            .zip(other)
            .map(|(a, &b)| S::from_f64(f(a.to_f64(), b)))
            .collect();
        Tensor::new(self.shape().to_vec(), data).expect("same length")
    }
}
