use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

pub fn relu_forward<S: Scalar>(input: &Tensor<S>) -> Tensor<S> {
    input.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Gradient through ReLU given the forward input.
pub fn relu_backward<S: Scalar>(input: &Tensor<S>, grad_out: &Tensor<S>) -> Result<Tensor<S>> {
    if input.shape() != grad_out.shape() {
        return Err(Error::param("relu grad shape mismatch"));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(x, g)| if x.to_f64() > 0.0 { *g } else { S::default() })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

#[derive(Debug, Clone, Default)]
pub struct Relu<S: Scalar = f32> {
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Relu<S> {
    pub fn new() -> Self {
        Self { cache: None }
    }
}

impl<S: Scalar> Layer<S> for Relu<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        self.cache = (mode == Mode::Train).then(|| x.clone());
        Ok(relu_forward(x))
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let x = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param("relu backward without train forward"))?;
        relu_backward(x, grad)
    }

    fn params(&self) -> Vec<&Param<S>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        Vec::new()
    }
}

/// `max(x, slope·x)` for `0 <= slope < 1`.
#[derive(Debug, Clone)]
pub struct LeakyRelu<S: Scalar = f32> {
    pub slope: f64,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> LeakyRelu<S> {
    pub fn new(slope: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&slope) {
            return Err(Error::param(format!("leaky relu slope {slope} outside [0,1)")));
        }
        Ok(Self { slope, cache: None })
    }
}

impl<S: Scalar> Layer<S> for LeakyRelu<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        self.cache = (mode == Mode::Train).then(|| x.clone());
        let a = self.slope;
        Ok(x.map(|v| if v > 0.0 { v } else { a * v }))
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let x = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param("leaky relu backward without train forward"))?;
        if x.shape() != grad.shape() {
            return Err(Error::param("leaky relu grad shape mismatch"));
        }
        let data = x
            .data()
            .iter()
            .zip(grad.data())
            .map(|(x, g)| S::from_f64(if x.to_f64() > 0.0 { g.to_f64() } else { self.slope * g.to_f64() }))
            .collect();
        Tensor::new(x.shape().to_vec(), data)
    }

    fn params(&self) -> Vec<&Param<S>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        Vec::new()
    }
}

/// Row-wise softmax of `[N,K]` logits, computed in f64 with max subtraction.
pub fn softmax_rows(logits: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(k) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|&z| (z - m).exp()).collect();
        let s: f64 = e.iter().sum();
        out.extend(e.into_iter().map(|v| v / s));
    }
    out
}

pub fn softmax<S: Scalar>(logits: &Tensor<S>) -> Result<Tensor<S>> {
    let s = logits.shape();
    if s.len() != 2 || s[1] < 2 {
        return Err(Error::param(format!("softmax expects [N,K>=2], got {s:?}")));
    }
    logits.check_finite("softmax logits")?;
    let p = softmax_rows(&logits.to_f64_vec(), s[1]);
    Tensor::from_f64(s, &p)
}
