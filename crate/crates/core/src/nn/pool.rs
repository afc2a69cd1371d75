use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Max pooling output together with the flat input index each output came from.
pub fn maxpool2d_forward<S: Scalar>(
    input: &Tensor<S>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<S>, Vec<usize>)> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::param(format!("maxpool2d expects [N,C,H,W], got {s:?}")));
    }
    if window == 0 || stride == 0 {
        return Err(Error::param("maxpool2d window and stride must be >= 1"));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    if window > h || window > w {
        return Err(Error::param(format!(
            "maxpool2d window {window} larger than input {h}x{w}"
        )));
    }
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let x = input.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut arg = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride * w + ox * stride;
                for dy in 0..window {
                    for dx in 0..window {
                        let idx = base + (oy * stride + dy) * w + ox * stride + dx;
                        // strict comparison keeps the first row-major maximum
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::new(vec![n, c, oh, ow], out)?, arg))
}

/// Route each output gradient to its recorded argmax position.
pub fn maxpool2d_backward<S: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<S>,
) -> Result<Tensor<S>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::param("maxpool2d grad does not match cached output"));
    }
    let mut dx = vec![0.0f64; input_shape.iter().product()];
    for (&i, g) in argmax.iter().zip(grad_out.data()) {
        dx[i] += g.to_f64();
    }
    Tensor::new(input_shape.to_vec(), dx.into_iter().map(S::from_f64).collect())
}

#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub window: usize,
    pub stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(window: usize, stride: usize) -> Self {
        Self {
            window,
            stride,
            cache: None,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        if self.window > h || self.window > w || self.stride == 0 {
            return None;
        }
        Some(((h - self.window) / self.stride + 1, (w - self.window) / self.stride + 1))
    }
}

impl<S: Scalar> Layer<S> for MaxPool2d {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let (y, arg) = maxpool2d_forward(x, self.window, self.stride)?;
        self.cache = (mode == Mode::Train).then(|| (x.shape().to_vec(), arg));
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let (shape, arg) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param("maxpool backward without train forward"))?;
        maxpool2d_backward(shape, arg, grad)
    }

    fn params(&self) -> Vec<&Param<S>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        Vec::new()
    }
}
