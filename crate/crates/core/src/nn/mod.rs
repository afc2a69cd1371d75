//! Layer-wise differentiable building blocks.
//!
//! Each layer caches what its backward pass needs during a train-mode forward
//! and accumulates parameter gradients into its [`Param`]s. Reductions run in
//! `f64` whatever the storage type.

mod activation;
mod batchnorm;
mod conv;
mod dropout;
mod linear;
mod optim;
mod pool;
mod tensor;

pub use activation::{relu_backward, relu_forward, softmax, softmax_rows, LeakyRelu, Relu};
pub use batchnorm::{BatchNorm, DEFAULT_EPS as BN_EPS, DEFAULT_MOMENTUM as BN_MOMENTUM};
pub use conv::{conv2d_backward, conv2d_forward, Conv2d};
pub use dropout::{dropout_forward, Dropout};
pub use linear::{linear_backward, linear_forward, Linear};
pub use optim::sgd_momentum_step;
pub use pool::{maxpool2d_backward, maxpool2d_forward, MaxPool2d};
pub use tensor::{DType, Param, Scalar, Tensor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub trait Layer<S: Scalar> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>>;

    /// Gradient wrt the input of the last train-mode forward; parameter
    /// gradients are accumulated as a side effect.
    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>>;

    fn params(&self) -> Vec<&Param<S>>;

    fn params_mut(&mut self) -> Vec<&mut Param<S>>;

    /// Non-trainable persistent state (batchnorm running statistics).
    fn buffers(&self) -> Vec<(&str, &Tensor<S>)> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<S>)> {
        Vec::new()
    }
}

/// Layers applied in order.
pub struct Sequential<S: Scalar> {
    layers: Vec<Box<dyn Layer<S> + Send + Sync>>,
}

impl<S: Scalar> Default for Sequential<S> {
    fn default() -> Self {
        Self { layers: Vec::new() }
    }
}

impl<S: Scalar> Sequential<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: impl Layer<S> + Send + Sync + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

impl<S: Scalar> Layer<S> for Sequential<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward(&h, mode)?;
        }
        Ok(h)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let mut g = grad.clone();
        for l in self.layers.iter_mut().rev() {
            g = l.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Param<S>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn buffers(&self) -> Vec<(&str, &Tensor<S>)> {
        self.layers.iter().flat_map(|l| l.buffers()).collect()
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<S>)> {
        self.layers.iter_mut().flat_map(|l| l.buffers_mut()).collect()
    }
}

/// Feature-axis concatenation of `[N, Da]` and `[N, Db]`.
pub fn concat<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.len() != 2 || sb.len() != 2 || sa[0] != sb[0] {
        return Err(Error::param(format!("concat batch mismatch {sa:?} vs {sb:?}")));
    }
    let (n, da, db) = (sa[0], sa[1], sb[1]);
    let mut data = Vec::with_capacity(n * (da + db));
    for i in 0..n {
        data.extend_from_slice(&a.data()[i * da..(i + 1) * da]);
        data.extend_from_slice(&b.data()[i * db..(i + 1) * db]);
    }
    Tensor::new(vec![n, da + db], data)
}

/// Split a concatenated gradient back into its `[N, Da]` and `[N, Db]` parts.
pub fn concat_backward<S: Scalar>(grad: &Tensor<S>, da: usize) -> Result<(Tensor<S>, Tensor<S>)> {
    let s = grad.shape();
    if s.len() != 2 || s[1] < da {
        return Err(Error::param(format!("concat grad {s:?} cannot split at {da}")));
    }
    let (n, d) = (s[0], s[1]);
    let db = d - da;
    let mut ga = Vec::with_capacity(n * da);
    let mut gb = Vec::with_capacity(n * db);
    for row in grad.data().chunks(d.max(1)).take(n) {
        ga.extend_from_slice(&row[..da]);
        gb.extend_from_slice(&row[da..]);
    }
    Ok((Tensor::new(vec![n, da], ga)?, Tensor::new(vec![n, db], gb)?))
}

/// Collapse `[N, ...]` to `[N, prod(...)]`.
pub fn flatten<S: Scalar>(x: Tensor<S>) -> Result<Tensor<S>> {
    let n = *x.shape().first().ok_or_else(|| Error::param("flatten of scalar"))?;
    let rest: usize = x.shape()[1..].iter().product();
    x.reshape(&[n, rest])
}
