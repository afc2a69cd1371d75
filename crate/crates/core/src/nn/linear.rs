use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

fn check(input: &[usize], weight: &[usize]) -> Result<(usize, usize, usize)> {
    if input.len() != 2 || weight.len() != 2 || input[1] != weight[1] {
        return Err(Error::param(format!(
            "linear expects [N,Din] input and [Dout,Din] weight, got {input:?} and {weight:?}"
        )));
    }
    Ok((input[0], weight[1], weight[0]))
}

/// `input · weightᵀ + bias`.
pub fn linear_forward<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
) -> Result<Tensor<S>> {
    let (n, din, dout) = check(input.shape(), weight.shape())?;
    if let Some(b) = bias {
        if b.shape() != [dout] {
            return Err(Error::param(format!("linear bias {:?}, expected [{dout}]", b.shape())));
        }
    }
    let x = input.to_f64_vec();
    let w = weight.to_f64_vec();
    let b = bias.map(|b| b.to_f64_vec());
    let mut out = Vec::with_capacity(n * dout);
    for row in x.chunks(din) {
        for o in 0..dout {
            let wr = &w[o * din..(o + 1) * din];
            let mut acc: f64 = row.iter().zip(wr).map(|(a, b)| a * b).sum();
            if let Some(b) = &b {
                acc += b[o];
            }
            out.push(S::from_f64(acc));
        }
    }
    Tensor::new(vec![n, dout], out)
}

/// Gradients of [`linear_forward`]: `(d input, d weight, d bias)`.
pub fn linear_backward<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<f64>, Vec<f64>)> {
    let (n, din, dout) = check(input.shape(), weight.shape())?;
    if grad_out.shape() != [n, dout] {
        return Err(Error::param("linear grad shape mismatch"));
    }
    let x = input.to_f64_vec();
    let w = weight.to_f64_vec();
    let g = grad_out.to_f64_vec();
    let mut dx = vec![0.0; n * din];
    let mut dw = vec![0.0; dout * din];
    let mut db = vec![0.0; dout];
    for b in 0..n {
        let xr = &x[b * din..(b + 1) * din];
        let dxr = &mut dx[b * din..(b + 1) * din];
        for o in 0..dout {
            let gv = g[b * dout + o];
            if gv == 0.0 {
                continue;
            }
            db[o] += gv;
            let wr = &w[o * din..(o + 1) * din];
            let dwr = &mut dw[o * din..(o + 1) * din];
            for i in 0..din {
                dxr[i] += gv * wr[i];
                dwr[i] += gv * xr[i];
            }
        }
    }
    Ok((
        Tensor::new(vec![n, din], dx.into_iter().map(S::from_f64).collect())?,
        dw,
        db,
    ))
}

/// Fully connected layer; the bias is optional (omitted before batchnorm).
#[derive(Debug, Clone)]
pub struct Linear<S: Scalar = f32> {
    pub weight: Param<S>,
    pub bias: Option<Param<S>>,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Linear<S> {
    pub fn new(weight: Param<S>, bias: Option<Param<S>>) -> Result<Self> {
        let ws = weight.shape();
        if ws.len() != 2 {
            return Err(Error::param(format!("linear weight must be rank 2, got {ws:?}")));
        }
        if let Some(b) = &bias {
            if b.shape() != [ws[0]] {
                return Err(Error::param(format!("`{}` has shape {:?}", b.name, b.shape())));
            }
        }
        Ok(Self {
            weight,
            bias,
            cache: None,
        })
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }
}

impl<S: Scalar> Layer<S> for Linear<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let y = linear_forward(x, &self.weight.value, self.bias.as_ref().map(|b| &b.value))?;
        self.cache = (mode == Mode::Train).then(|| x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let x = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param(format!("`{}` backward without train forward", self.weight.name)))?;
        let (dx, dw, db) = linear_backward(x, &self.weight.value, grad)?;
        self.weight.accumulate(&dw);
        if let Some(b) = self.bias.as_mut() {
            b.accumulate(&db);
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<S>> {
        let mut v = vec![&self.weight];
        v.extend(self.bias.as_ref());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut v = vec![&mut self.weight];
        v.extend(self.bias.as_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight() {
        let x = Tensor::<f64>::from_f64(&[2, 3], &[1., 2., 3., 4., 5., 6.]).unwrap();
        let eye = Tensor::from_f64(&[3, 3], &[1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let y = linear_forward(&x, &eye, Some(&Tensor::zeros(&[3]))).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn dot_plus_bias() {
        let x = Tensor::<f64>::from_f64(&[1, 2], &[1., 2.]).unwrap();
        let w = Tensor::from_f64(&[1, 2], &[3., 4.]).unwrap();
        let b = Tensor::from_f64(&[1], &[5.]).unwrap();
        assert_eq!(linear_forward(&x, &w, Some(&b)).unwrap().data(), &[16.0]);
    }

    #[test]
    fn shape_mismatch() {
        let x = Tensor::<f64>::zeros(&[1, 3]);
        let w = Tensor::zeros(&[2, 2]);
        assert!(matches!(linear_forward(&x, &w, None), Err(Error::Parameter(_))));
    }
}
