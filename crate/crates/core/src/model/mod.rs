//! The dual-branch network.
//!
//! Both branches see the same image. Each runs its backbone, then maxpool 2,
//! ReLU and (optionally) batchnorm, and is flattened. The two feature vectors
//! are concatenated and passed through the head: for every hidden width a
//! bias-free linear layer, batchnorm, activation and dropout, then a final
//! linear layer producing `K` logits.
//!
//! Parameter names are `a.backbone.conv{i}.*`, `a.bn.*`, the same under `b.`,
//! and `head.fc{i}.weight`, `head.bn{i}.*`, `head.out.{weight,bias}`.

pub mod backbone;
pub mod weights;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use backbone::{he_normal, Backbone, BackboneSpec, ConvBackbone};
pub use weights::{read_weight_file, write_weight_file, RawTensor};

use crate::error::{Error, Result};
use crate::nn::{
    concat, concat_backward, flatten, softmax_rows, BatchNorm, Dropout, LeakyRelu, Layer, Linear, MaxPool2d, Mode,
    Param, Relu, Scalar, Tensor,
};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    /// Negative slope 0.01.
    LeakyRelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub activation: Activation,
    pub classes: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256, 128],
            dropout: 0.25,
            activation: Activation::Relu,
            classes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `[H, W]` of the RGB input.
    pub input_size: [usize; 2],
    pub branch_a: BackboneSpec,
    pub branch_b: BackboneSpec,
    pub branch_batchnorm: bool,
    pub head: HeadConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_size: [32, 32],
            branch_a: BackboneSpec::default(),
            branch_b: BackboneSpec::default(),
            branch_batchnorm: true,
            head: HeadConfig::default(),
        }
    }
}

impl ModelConfig {
    /// Small configuration used by gradient checks: 8×8 inputs, channels [2, 4].
    pub fn tiny(classes: usize) -> Self {
        let spec = BackboneSpec::ToyCnn {
            channels: vec![2, 4],
            kernel_size: 3,
        };
        Self {
            input_size: [8, 8],
            branch_a: spec.clone(),
            branch_b: spec,
            branch_batchnorm: true,
            head: HeadConfig {
                hidden: vec![6, 5, 4],
                dropout: 0.0,
                activation: Activation::Relu,
                classes,
            },
        }
    }
}

struct Branch<S: Scalar> {
    backbone: Box<dyn Backbone<S>>,
    pool: MaxPool2d,
    relu: Relu<S>,
    bn: Option<BatchNorm<S>>,
    feat: [usize; 3],
}

impl<S: Scalar> Branch<S> {
    fn build(name: &str, spec: &BackboneSpec, cfg: &ModelConfig, rng: &RngState) -> Result<Self> {
        let build_err = |msg: String| Error::Build {
            branch: name.to_string(),
            msg,
        };
        let backbone = ConvBackbone::<S>::build(&format!("{name}.backbone"), spec, rng).map_err(|e| match e {
            Error::Parameter(m) => build_err(m),
            other => other,
        })?;
        let [h, w] = cfg.input_size;
        let [c, bh, bw] = backbone
            .output_shape(h, w)
            .ok_or_else(|| build_err(format!("backbone {} collapses a {h}x{w} input", backbone.describe())))?;
        let pool = MaxPool2d::new(2, 2);
        let (ph, pw) = pool
            .output_hw(bh, bw)
            .ok_or_else(|| build_err(format!("backbone output {bh}x{bw} is smaller than the 2x2 pooling window")))?;
        Ok(Self {
            backbone: Box::new(backbone),
            pool,
            relu: Relu::new(),
            bn: cfg.branch_batchnorm.then(|| BatchNorm::new(&format!("{name}.bn"), c)),
            feat: [c, ph, pw],
        })
    }

    fn width(&self) -> usize {
        self.feat.iter().product()
    }

    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        let h = self.backbone.forward(x, mode)?;
        let h = self.pool.forward(&h, mode)?;
        let mut h = self.relu.forward(&h, mode)?;
        if let Some(bn) = self.bn.as_mut() {
            h = bn.forward(&h, mode)?;
        }
        flatten(h)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let n = grad.shape()[0];
        let [c, h, w] = self.feat;
        let mut g = grad.clone().reshape(&[n, c, h, w])?;
        if let Some(bn) = self.bn.as_mut() {
            g = bn.backward(&g)?;
        }
        let g = self.relu.backward(&g)?;
        let g = self.pool.backward(&g)?;
        self.backbone.backward(&g)
    }

    fn params(&self) -> Vec<&Param<S>> {
        let mut v = self.backbone.params();
        if let Some(bn) = &self.bn {
            v.extend(bn.params());
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut v = self.backbone.params_mut();
        if let Some(bn) = self.bn.as_mut() {
            v.extend(bn.params_mut());
        }
        v
    }

    fn buffers(&self) -> Vec<(&str, &Tensor<S>)> {
        self.bn.as_ref().map(|b| b.buffers()).unwrap_or_default()
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<S>)> {
        self.bn.as_mut().map(|b| b.buffers_mut()).unwrap_or_default()
    }
}

struct HiddenBlock<S: Scalar> {
    fc: Linear<S>,
    bn: BatchNorm<S>,
    act: Box<dyn Layer<S> + Send + Sync>,
    drop: Dropout,
}

pub struct DualBranchModel<S: Scalar = f32> {
    config: ModelConfig,
    a: Branch<S>,
    b: Branch<S>,
    hidden: Vec<HiddenBlock<S>>,
    out: Linear<S>,
}

impl<S: Scalar> DualBranchModel<S> {
    /// Initial weights from stream `init`, dropout masks from stream `dropout`.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        Self::build_with(config, &RngState::new(seed, "init"), &RngState::new(seed, "dropout"))
    }

    pub fn build_with(config: &ModelConfig, init: &RngState, dropout: &RngState) -> Result<Self> {
        let head = &config.head;
        if !(2..=64).contains(&head.classes) {
            return Err(Error::Build {
                branch: "head".into(),
                msg: format!("{} output classes; need at least 2", head.classes),
            });
        }
        if head.hidden.contains(&0) {
            return Err(Error::Build {
                branch: "head".into(),
                msg: format!("hidden widths {:?} must be positive", head.hidden),
            });
        }
        let a = Branch::build("a", &config.branch_a, config, init)?;
        let b = Branch::build("b", &config.branch_b, config, init)?;
        let mut width = a.width() + b.width();
        let mut hidden = Vec::new();
        for (i, &h) in head.hidden.iter().enumerate() {
            let fc = Linear::new(he_normal(&format!("head.fc{i}.weight"), &[h, width], width, init), None)?;
            let act: Box<dyn Layer<S> + Send + Sync> = match head.activation {
                Activation::Relu => Box::new(Relu::<S>::new()),
                Activation::LeakyRelu => Box::new(LeakyRelu::<S>::new(0.01)?),
            };
            hidden.push(HiddenBlock {
                fc,
                bn: BatchNorm::new(&format!("head.bn{i}"), h),
                act,
                drop: Dropout::new(head.dropout, dropout.child(format!("head{i}")))?,
            });
            width = h;
        }
        let out = Linear::new(
            he_normal("head.out.weight", &[head.classes, width], width, init),
            Some(Param::new("head.out.bias", Tensor::zeros(&[head.classes]))),
        )?;
        Ok(Self {
            config: config.clone(),
            a,
            b,
            hidden,
            out,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn classes(&self) -> usize {
        self.config.head.classes
    }

    /// Widths of the two flattened branch outputs.
    pub fn branch_widths(&self) -> (usize, usize) {
        (self.a.width(), self.b.width())
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Param<S>> {
        self.params_mut().into_iter().find(|p| p.name == name)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Restart dropout masks from `rng` (one child stream per head block).
    pub fn reseed_dropout(&mut self, rng: &RngState) {
        for (i, blk) in self.hidden.iter_mut().enumerate() {
            blk.drop.reseed(rng.child(format!("head{i}")));
        }
    }

    fn check_input(&self, x: &Tensor<S>) -> Result<()> {
        let [h, w] = self.config.input_size;
        let s = x.shape();
        if s.len() != 4 || s[1] != 3 || s[2] != h || s[3] != w {
            return Err(Error::param(format!("model expects [N,3,{h},{w}], got {s:?}")));
        }
        Ok(())
    }

    /// Eval-mode class probabilities, row-major `[N, K]`, in chunks of `batch`.
    pub fn predict_proba(&mut self, x: &Tensor<S>, batch: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let n = x.shape()[0];
        let mut out = Vec::with_capacity(n * self.classes());
        let mut start = 0;
        while start < n {
            let end = (start + batch.max(1)).min(n);
            let logits = self.forward(&x.slice_batch(start, end)?, Mode::Eval)?;
            logits.check_finite("logits")?;
            out.extend(softmax_rows(&logits.to_f64_vec(), self.classes()));
            start = end;
        }
        Ok(out)
    }

    /// Parameters then buffers, by name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<S>)> {
        let mut v: Vec<(String, &Tensor<S>)> = self.params().into_iter().map(|p| (p.name.clone(), &p.value)).collect();
        v.extend(self.buffers().into_iter().map(|(n, t)| (n.to_string(), t)));
        v
    }

    pub fn save_weights(&self, path: impl AsRef<Path>) -> Result<()> {
        let named = self.named_tensors();
        let refs: Vec<(&str, &Tensor<S>)> = named.iter().map(|(n, t)| (n.as_str(), *t)).collect();
        write_weight_file(path, &refs)
    }

    /// Replace every parameter and buffer from `path`. Nothing is modified
    /// unless the whole file matches the model.
    pub fn load_weights(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let raw = read_weight_file(path)?;
        self.assign_raw(&raw)
    }

    pub fn assign_raw(&mut self, raw: &[RawTensor]) -> Result<()> {
        let by_name: HashMap<&str, &RawTensor> = raw.iter().map(|t| (t.name.as_str(), t)).collect();
        let mut staged: HashMap<String, Tensor<S>> = HashMap::new();
        for (name, t) in self.named_tensors() {
            let r = by_name.get(name.as_str()).ok_or_else(|| Error::Weights {
                tensor: name.clone(),
                msg: "missing from weight file".into(),
            })?;
            if r.shape != t.shape() {
                return Err(Error::Weights {
                    tensor: name,
                    msg: format!("shape {:?} in file, model expects {:?}", r.shape, t.shape()),
                });
            }
            staged.insert(name, r.to_tensor()?);
        }
        if let Some(extra) = raw.iter().find(|t| !staged.contains_key(&t.name)) {
            return Err(Error::Weights {
                tensor: extra.name.clone(),
                msg: "not present in model".into(),
            });
        }
        for p in self.params_mut() {
            p.value = staged.remove(&p.name).expect("staged");
        }
        for (name, t) in self.buffers_mut() {
            *t = staged.remove(name).expect("staged");
        }
        Ok(())
    }

    /// Build from `config` and load `path`.
    pub fn load(config: &ModelConfig, path: impl AsRef<Path>) -> Result<Self> {
        let mut m = Self::build(config, 0)?;
        m.load_weights(path)?;
        Ok(m)
    }

    /// Copy of all parameter values and buffers, for checkpointing in memory.
    pub fn snapshot(&self) -> Vec<Tensor<S>> {
        self.named_tensors().into_iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn restore(&mut self, snap: &[Tensor<S>]) -> Result<()> {
        let n = self.params().len() + self.buffers().len();
        if snap.len() != n {
            return Err(Error::param(format!("snapshot has {} tensors, model {n}", snap.len())));
        }
        let mut it = snap.iter();
        for p in self.params_mut() {
            p.value = it.next().expect("len").clone();
        }
        for (_, t) in self.buffers_mut() {
            *t = it.next().expect("len").clone();
        }
        Ok(())
    }
}

impl<S: Scalar> Layer<S> for DualBranchModel<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Result<Tensor<S>> {
        self.check_input(x)?;
        let fa = self.a.forward(x, mode)?;
        let fb = self.b.forward(x, mode)?;
        let mut h = concat(&fa, &fb)?;
        for blk in &mut self.hidden {
            h = blk.fc.forward(&h, mode)?;
            h = blk.bn.forward(&h, mode)?;
            h = blk.act.forward(&h, mode)?;
            h = blk.drop.forward(&h, mode)?;
        }
        self.out.forward(&h, mode)
    }

    /// Returns the gradient wrt the input image (sum over both branches).
    fn backward(&mut self, grad: &Tensor<S>) -> Result<Tensor<S>> {
        let mut g = self.out.backward(grad)?;
        for blk in self.hidden.iter_mut().rev() {
            g = blk.drop.backward(&g)?;
            g = blk.act.backward(&g)?;
            g = blk.bn.backward(&g)?;
            g = blk.fc.backward(&g)?;
        }
        let (ga, gb) = concat_backward(&g, self.a.width())?;
        let mut dx = self.a.backward(&ga)?;
        dx.add_assign(&self.b.backward(&gb)?)?;
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<S>> {
        let mut v = self.a.params();
        v.extend(self.b.params());
        for blk in &self.hidden {
            v.extend(blk.fc.params());
            v.extend(blk.bn.params());
        }
        v.extend(self.out.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut v = self.a.params_mut();
        v.extend(self.b.params_mut());
        for blk in &mut self.hidden {
            v.extend(blk.fc.params_mut());
            v.extend(blk.bn.params_mut());
        }
        v.extend(self.out.params_mut());
        v
    }

    fn buffers(&self) -> Vec<(&str, &Tensor<S>)> {
        let mut v = self.a.buffers();
        v.extend(self.b.buffers());
        for blk in &self.hidden {
            v.extend(blk.bn.buffers());
        }
        v
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<S>)> {
        let mut v = self.a.buffers_mut();
        v.extend(self.b.buffers_mut());
        for blk in &mut self.hidden {
            v.extend(blk.bn.buffers_mut());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n: usize, hw: usize, seed: u64) -> Tensor<f64> {
        use rand::Rng;
        let mut g = RngState::new(seed, "x").generator();
        let v: Vec<f64> = (0..n * 3 * hw * hw).map(|_| g.random_range(0.0..1.0)).collect();
        Tensor::from_f64(&[n, 3, hw, hw], &v).unwrap()
    }

    #[test]
    fn default_shapes() {
        let mut m = DualBranchModel::<f32>::build(&ModelConfig::default(), 1).unwrap();
        assert_eq!(m.branch_widths(), (32 * 2 * 2, 32 * 2 * 2));
        let x: Tensor<f32> = input(3, 32, 0).convert();
        assert_eq!(m.forward(&x, Mode::Eval).unwrap().shape(), &[3, 5]);
        let mut cfg = ModelConfig::default();
        cfg.head.classes = 2;
        let mut m2 = DualBranchModel::<f32>::build(&cfg, 1).unwrap();
        assert_eq!(m2.forward(&x, Mode::Eval).unwrap().shape(), &[3, 2]);
        assert!(m.forward(&input(1, 16, 0).convert(), Mode::Eval).is_err());
    }

    #[test]
    fn names_unique_and_seeded() {
        let m = DualBranchModel::<f32>::build(&ModelConfig::default(), 9).unwrap();
        let mut names: Vec<_> = m.named_tensors().into_iter().map(|(n, _)| n).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        let m2 = DualBranchModel::<f32>::build(&ModelConfig::default(), 9).unwrap();
        assert_eq!(m.snapshot(), m2.snapshot());
        let m3 = DualBranchModel::<f32>::build(&ModelConfig::default(), 10).unwrap();
        assert_ne!(m.snapshot(), m3.snapshot());
    }

    #[test]
    fn collapsing_backbone_names_branch() {
        let mut cfg = ModelConfig::tiny(5);
        cfg.branch_b = BackboneSpec::ToyCnn {
            channels: vec![2, 2, 2],
            kernel_size: 3,
        };
        match DualBranchModel::<f64>::build(&cfg, 0) {
            Err(Error::Build { branch, .. }) => assert_eq!(branch, "b"),
            Err(e) => panic!("{e}"),
            Ok(_) => panic!("built"),
        }
    }

    #[test]
    fn zero_final_layer_gives_uniform() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 2).unwrap();
        m.param_mut("head.out.weight").unwrap().value.fill_zero();
        let p = m.predict_proba(&input(2, 8, 1), 8).unwrap();
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn every_param_gets_gradient() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(3), 4).unwrap();
        let x = input(6, 8, 2);
        let y = m.forward(&x, Mode::Train).unwrap();
        let g = Tensor::from_f64(y.shape(), &(0..y.len()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect::<Vec<_>>()).unwrap();
        m.backward(&g).unwrap();
        for p in m.params() {
            assert!(p.grad.data().iter().any(|&v| v != 0.0), "{} has zero grad", p.name);
        }
    }

    #[test]
    fn eval_duplicate_rows_match() {
        let mut m = DualBranchModel::<f64>::build(&ModelConfig::tiny(5), 3).unwrap();
        let x = input(1, 8, 5);
        let xx = Tensor::stack(&[x.clone().reshape(&[3, 8, 8]).unwrap(), x.reshape(&[3, 8, 8]).unwrap()]).unwrap();
        let y = m.forward(&xx, Mode::Eval).unwrap();
        assert_eq!(y.data()[..5], y.data()[5..]);
    }

    #[test]
    fn load_is_all_or_nothing() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("w.bin");
        let m = DualBranchModel::<f32>::build(&ModelConfig::tiny(5), 1).unwrap();
        m.save_weights(&p).unwrap();
        let mut other = DualBranchModel::<f32>::build(&ModelConfig::tiny(2), 2).unwrap();
        let before = other.snapshot();
        match other.load_weights(&p) {
            Err(Error::Weights { tensor, .. }) => assert_eq!(tensor, "head.out.weight"),
            r => panic!("{r:?}"),
        }
        assert_eq!(other.snapshot(), before);
        let mut same = DualBranchModel::<f32>::build(&ModelConfig::tiny(5), 7).unwrap();
        same.load_weights(&p).unwrap();
        assert_eq!(same.snapshot(), m.snapshot());
    }
}
