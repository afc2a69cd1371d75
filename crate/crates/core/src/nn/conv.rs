use rayon::prelude::*;

use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Geometry of a 2-D convolution over one sample.
#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn new(input: &[usize], weight: &[usize], stride: usize, pad: usize) -> Result<Self> {
        if input.len() != 4 || weight.len() != 4 {
            return Err(Error::param(format!(
                "conv2d expects [N,C,H,W] input and [Cout,Cin,kh,kw] weight, got {input:?} and {weight:?}"
            )));
        }
        let (cin, h, w) = (input[1], input[2], input[3]);
        let (cout, wcin, kh, kw) = (weight[0], weight[1], weight[2], weight[3]);
        if wcin != cin {
            return Err(Error::param(format!(
                "conv2d input has {cin} channels, weight expects {wcin}"
            )));
        }
        if stride == 0 {
            return Err(Error::param("conv2d stride must be >= 1"));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(Error::param(format!(
                "conv2d kernel {kh}x{kw} larger than padded input {}x{}",
                h + 2 * pad,
                w + 2 * pad
            )));
        }
        Ok(Self {
            cin,
            h,
            w,
            cout,
            kh,
            kw,
            stride,
            pad,
            oh: (h + 2 * pad - kh) / stride + 1,
            ow: (w + 2 * pad - kw) / stride + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn out_pixels(&self) -> usize {
        self.oh * self.ow
    }

    /// Unfold one sample into a `[cin*kh*kw, oh*ow]` column matrix.
    fn im2col<S: Scalar>(&self, x: &[S]) -> Vec<f64> {
        let p = self.out_pixels();
        let mut col = vec![0.0; self.patch_len() * p];
        for ci in 0..self.cin {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let dst = &mut col[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        let iy = (oy * self.stride + ki) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        let src = &x[(ci * self.h + iy as usize) * self.w..][..self.w];
                        for ox in 0..self.ow {
                            let ix = (ox * self.stride + kj) as isize - self.pad as isize;
                            if ix >= 0 && ix < self.w as isize {
                                dst[oy * self.ow + ox] = src[ix as usize].to_f64();
                            }
                        }
                    }
                }
            }
        }
        col
    }

    /// Fold a column-matrix gradient back onto the input layout.
    fn col2im(&self, col: &[f64], dx: &mut [f64]) {
        let p = self.out_pixels();
        for ci in 0..self.cin {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let src = &col[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        let iy = (oy * self.stride + ki) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        let base = (ci * self.h + iy as usize) * self.w;
                        for ox in 0..self.ow {
                            let ix = (ox * self.stride + kj) as isize - self.pad as isize;
                            if ix >= 0 && ix < self.w as isize {
                                dx[base + ix as usize] += src[oy * self.ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Direct 2-D convolution (cross-correlation), `[N,Cin,H,W] -> [N,Cout,H',W']`.
pub fn conv2d_forward<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    bias: &Tensor<S>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<S>> {
    let g = ConvGeom::new(input.shape(), weight.shape(), stride, padding)?;
    if bias.len() != g.cout {
        return Err(Error::param(format!(
            "conv2d bias has {} entries, expected {}",
            bias.len(),
            g.cout
        )));
    }
    input.check_finite("conv2d input")?;
    let n = input.shape()[0];
    let in_len = g.cin * g.h * g.w;
    let p = g.out_pixels();
    let k = g.patch_len();
    let w: Vec<f64> = weight.to_f64_vec();
    let b: Vec<f64> = bias.to_f64_vec();
    let mut out = vec![S::default(); n * g.cout * p];
    out.par_chunks_mut(g.cout * p)
        .zip(input.data().par_chunks(in_len))
        .for_each(|(dst, x)| {
            let col = g.im2col(x);
            let mut acc = vec![0.0f64; p];
            for co in 0..g.cout {
                acc.iter_mut().for_each(|a| *a = b[co]);
                let wrow = &w[co * k..(co + 1) * k];
                for (kk, &wv) in wrow.iter().enumerate() {
                    if wv == 0.0 {
                        continue;
                    }
                    let crow = &col[kk * p..(kk + 1) * p];
                    for (a, &c) in acc.iter_mut().zip(crow) {
                        *a += wv * c;
                    }
                }
                for (o, &a) in dst[co * p..(co + 1) * p].iter_mut().zip(&acc) {
                    *o = S::from_f64(a);
                }
            }
        });
    Tensor::new(vec![n, g.cout, g.oh, g.ow], out)
}

/// Gradients of [`conv2d_forward`]: `(d input, d weight, d bias)`.
pub fn conv2d_backward<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    grad_out: &Tensor<S>,
    stride: usize,
    padding: usize,
) -> Result<(Tensor<S>, Vec<f64>, Vec<f64>)> {
    let g = ConvGeom::new(input.shape(), weight.shape(), stride, padding)?;
    let n = input.shape()[0];
    if grad_out.shape() != [n, g.cout, g.oh, g.ow] {
        return Err(Error::param(format!(
            "conv2d grad shape {:?} does not match output [{n},{},{},{}]",
            grad_out.shape(),
            g.cout,
            g.oh,
            g.ow
        )));
    }
    let in_len = g.cin * g.h * g.w;
    let p = g.out_pixels();
    let k = g.patch_len();
    let w: Vec<f64> = weight.to_f64_vec();

    let per_sample: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = input
        .data()
        .par_chunks(in_len)
        .zip(grad_out.data().par_chunks(g.cout * p))
        .map(|(x, go)| {
            let col = g.im2col(x);
            let go: Vec<f64> = go.iter().map(|v| v.to_f64()).collect();
            let mut dw = vec![0.0; g.cout * k];
            let mut db = vec![0.0; g.cout];
            let mut dcol = vec![0.0; k * p];
            for co in 0..g.cout {
                let grow = &go[co * p..(co + 1) * p];
                db[co] = grow.iter().sum();
                for kk in 0..k {
                    let crow = &col[kk * p..(kk + 1) * p];
                    dw[co * k + kk] = grow.iter().zip(crow).map(|(a, b)| a * b).sum();
                    let wv = w[co * k + kk];
                    if wv != 0.0 {
                        for (d, &gv) in dcol[kk * p..(kk + 1) * p].iter_mut().zip(grow) {
                            *d += wv * gv;
                        }
                    }
                }
            }
            let mut dx = vec![0.0; in_len];
            g.col2im(&dcol, &mut dx);
            (dx, dw, db)
        })
        .collect();

    let mut dx_all = Vec::with_capacity(n * in_len);
    let mut dw = vec![0.0; g.cout * k];
    let mut db = vec![0.0; g.cout];
    // fixed sample order keeps the reduction deterministic
    for (dx, sw, sb) in per_sample {
        dx_all.extend(dx.into_iter().map(S::from_f64));
        dw.iter_mut().zip(&sw).for_each(|(a, b)| *a += b);
        db.iter_mut().zip(&sb).for_each(|(a, b)| *a += b);
    }
    Ok((Tensor::new(input.shape().to_vec(), dx_all)?, dw, db))
}

/// Convolution layer owning its weight and bias.
#[derive(Debug, Clone)]
pub struct Conv2d<S: Scalar = f32> {
    pub weight: Param<S>,
    pub bias: Param<S>,
    pub stride: usize,
    pub padding: usize,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Conv2d<S> {
    pub fn new(weight: Param<S>, bias: Param<S>, stride: usize, padding: usize) -> Result<Self> {
        let ws = weight.shape();
        if ws.len() != 4 || bias.shape() != [ws[0]] {
            return Err(Error::param(format!(
                "conv2d `{}` weight {:?} / bias {:?} mismatch",
                weight.name,
                ws,
                bias.shape()
            )));
        }
        Ok(Self {
            weight,
            bias,
            stride,
            padding,
            cache: None,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (kh, kw) = (self.weight.shape()[2], self.weight.shape()[3]);
        if h + 2 * self.padding < kh || w + 2 * self.padding < kw {
            return None;
        }
        Some((
            (h + 2 * self.padding - kh) / self.stride + 1,
            (w + 2 * self.padding - kw) / self.stride + 1,
        ))
    }
}

impl<S: Scalar> Layer<S> for Conv2d<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let y = conv2d_forward(x, &self.weight.value, &self.bias.value, self.stride, self.padding)?;
        self.cache = (mode == Mode::Train).then(|| x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let x = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::param(format!("`{}` backward without train forward", self.weight.name)))?;
        let (dx, dw, db) = conv2d_backward(x, &self.weight.value, grad, self.stride, self.padding)?;
        self.weight.accumulate(&dw);
        self.bias.accumulate(&db);
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<S>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
