use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::weights::read_weight_file;
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Layer, MaxPool2d, Mode, Param, Relu, Scalar, Sequential, Tensor};
use crate::rng::RngState;

/// Feature extractor for one branch: `[N,3,H,W] -> [N,C,h,w]`.
pub trait Backbone<S: Scalar>: Layer<S> + Send + Sync {
    /// Output `[C, h, w]` for an `H×W` RGB input, or `None` if it collapses.
    fn output_shape(&self, h: usize, w: usize) -> Option<[usize; 3]>;
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackboneSpec {
    /// Blocks of conv(k×k, same padding) → ReLU → maxpool 2.
    ToyCnn {
        channels: Vec<usize>,
        #[serde(default = "default_kernel")]
        kernel_size: usize,
    },
    /// Conv stack read from `conv{i}.weight` / `conv{i}.bias` tensors; same block layout.
    ExternalWeights { path: PathBuf },
}

fn default_kernel() -> usize {
    3
}

impl Default for BackboneSpec {
    fn default() -> Self {
        BackboneSpec::ToyCnn {
            channels: vec![8, 16, 32],
            kernel_size: 3,
        }
    }
}

/// He-normal sample for a tensor with `fan_in` inputs, from stream `init/<name>`.
pub fn he_normal<S: Scalar>(name: &str, shape: &[usize], fan_in: usize, rng: &RngState) -> Param<S> {
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("finite std");
    let mut g = rng.child(name).generator();
    let n: usize = shape.iter().product();
    let v: Vec<f64> = (0..n).map(|_| dist.sample(&mut g)).collect();
    Param::new(name, Tensor::from_f64(shape, &v).expect("shape"))
}

/// Conv blocks as in [`BackboneSpec`].
pub struct ConvBackbone<S: Scalar = f32> {
    seq: Sequential<S>,
    /// `(in, out, kernel)` per block.
    blocks: Vec<(usize, usize, usize)>,
    origin: String,
}

impl<S: Scalar> ConvBackbone<S> {
    fn from_convs(convs: Vec<Conv2d<S>>, origin: String) -> Self {
        let mut seq = Sequential::new();
        let mut blocks = Vec::new();
        for c in convs {
            blocks.push((c.in_channels(), c.out_channels(), c.weight.shape()[2]));
            seq.push(c);
            seq.push(Relu::<S>::new());
            seq.push(MaxPool2d::new(2, 2));
        }
        Self { seq, blocks, origin }
    }

    pub fn toy(prefix: &str, channels: &[usize], kernel: usize, rng: &RngState) -> Result<Self> {
        if channels.is_empty() || channels.contains(&0) {
            return Err(Error::param(format!("toy backbone channels {channels:?} must be non-empty and positive")));
        }
        if kernel % 2 == 0 {
            return Err(Error::param(format!("toy backbone kernel {kernel} must be odd")));
        }
        let mut convs = Vec::new();
        let mut cin = 3;
        for (i, &cout) in channels.iter().enumerate() {
            let w = he_normal(&format!("{prefix}.conv{i}.weight"), &[cout, cin, kernel, kernel], cin * kernel * kernel, rng);
            let b = Param::new(format!("{prefix}.conv{i}.bias"), Tensor::zeros(&[cout]));
            convs.push(Conv2d::new(w, b, 1, kernel / 2)?);
            cin = cout;
        }
        Ok(Self::from_convs(convs, format!("toy{channels:?}k{kernel}")))
    }

    /// Load `conv0.*`, `conv1.*`, … from a weight file; parameters are renamed under `prefix`.
    pub fn external(prefix: &str, path: &Path) -> Result<Self> {
        let raw = read_weight_file(path)?;
        let find = |n: &str| raw.iter().find(|t| t.name == n);
        let mut convs = Vec::new();
        let mut cin = 3;
        for i in 0.. {
            let wn = format!("conv{i}.weight");
            let Some(w) = find(&wn) else { break };
            let bn = format!("conv{i}.bias");
            let b = find(&bn).ok_or_else(|| Error::Weights {
                tensor: bn.clone(),
                msg: "missing bias".into(),
            })?;
            let s = &w.shape;
            if s.len() != 4 || s[1] != cin || s[2] != s[3] || s[2] % 2 == 0 {
                return Err(Error::Weights {
                    tensor: wn,
                    msg: format!("shape {s:?} is not [out, {cin}, k, k] with odd k"),
                });
            }
            if b.shape != [s[0]] {
                return Err(Error::Weights {
                    tensor: bn,
                    msg: format!("shape {:?}, expected [{}]", b.shape, s[0]),
                });
            }
            let w = Param::new(format!("{prefix}.conv{i}.weight"), w.to_tensor()?);
            let b = Param::new(format!("{prefix}.conv{i}.bias"), b.to_tensor()?);
            let k = s[2];
            convs.push(Conv2d::new(w, b, 1, k / 2)?);
            cin = s[0];
        }
        if convs.is_empty() {
            return Err(Error::Weights {
                tensor: "conv0.weight".into(),
                msg: format!("not found in {}", path.display()),
            });
        }
        Ok(Self::from_convs(convs, format!("external:{}", path.display())))
    }

    pub fn build(prefix: &str, spec: &BackboneSpec, rng: &RngState) -> Result<Self> {
        match spec {
            BackboneSpec::ToyCnn { channels, kernel_size } => Self::toy(prefix, channels, *kernel_size, rng),
            BackboneSpec::ExternalWeights { path } => Self::external(prefix, path),
        }
    }

    pub fn blocks(&self) -> &[(usize, usize, usize)] {
        &self.blocks
    }
}

impl<S: Scalar> Layer<S> for ConvBackbone<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        self.seq.forward(x, mode)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        self.seq.backward(grad)
    }

    fn params(&self) -> Vec<&Param<S>> {
        self.seq.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        self.seq.params_mut()
    }
}

impl<S: Scalar> Backbone<S> for ConvBackbone<S> {
    fn output_shape(&self, mut h: usize, mut w: usize) -> Option<[usize; 3]> {
        let mut c = 3;
        for &(cin, cout, _) in &self.blocks {
            if cin != c || h < 2 || w < 2 {
                return None;
            }
            (c, h, w) = (cout, h / 2, w / 2);
        }
        Some([c, h, w])
    }

    fn describe(&self) -> String {
        self.origin.clone()
    }
}
