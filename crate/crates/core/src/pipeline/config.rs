use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentParams;
use crate::dataset::{MergeSpec, SplitFractions, NUM_GRADES};
use crate::error::{Error, Result};
use crate::metrics::{AucAverage, SpecificityConvention};
use crate::model::{DualBranchModel, ModelConfig};
use crate::train::{TrainConfig, TuneSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Base manifest (CSV with `id_code,diagnosis`).
    pub manifest: Option<PathBuf>,
    pub fractions: SplitFractions,
    pub merge: Option<MergeSpec>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            fractions: SplitFractions::default(),
            merge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Images per planned training entry, original included.
    pub multiplier: usize,
    /// Grades that get expanded; others pass through once.
    pub classes: BTreeSet<u8>,
    pub params: AugmentParams,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            multiplier: 10,
            classes: (0..NUM_GRADES as u8).collect(),
            params: AugmentParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub space: TuneSpace,
    /// Epochs per trial.
    pub epochs: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            space: TuneSpace::default(),
            epochs: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub specificity: SpecificityConvention,
    pub auc_average: AucAverage,
}

/// Everything a CLI run needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub augmentation: AugmentationConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub tune: TuneConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("run"),
            data: DataConfig::default(),
            augmentation: AugmentationConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            tune: TuneConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Relative manifest paths resolve against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = cfg.data.manifest.as_mut() {
            fix(m);
        }
        if let Some(merge) = cfg.data.merge.as_mut() {
            merge.auxiliary.iter_mut().for_each(fix);
        }
        Ok(cfg)
    }

    /// The single seed drives every stream; `train.seed` is kept in step.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out_dir = o;
        }
        self.train.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.data.fractions.validate()?;
        if let Some(m) = &self.data.merge {
            m.validate()?;
        }
        if self.augmentation.multiplier == 0 {
            return Err(Error::Config("augmentation.multiplier must be >= 1".into()));
        }
        if let Some(g) = self.augmentation.classes.iter().find(|&&g| usize::from(g) >= NUM_GRADES) {
            return Err(Error::Config(format!("augmentation.classes: unknown grade {g}")));
        }
        self.augmentation.params.validate()?;
        self.train.validate()?;
        let k = self.train.task.classes();
        if self.model.head.classes != k {
            return Err(Error::Config(format!(
                "model.head.classes = {} but task {:?} needs {k}",
                self.model.head.classes, self.train.task
            )));
        }
        self.tune.space.validate()?;
        if self.tune.epochs == 0 {
            return Err(Error::Config("tune.epochs must be >= 1".into()));
        }
        DualBranchModel::<f32>::build(&self.model, self.seed)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_json(&s).unwrap(), c);
        assert_eq!(PipelineConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(PipelineConfig::from_json(r#"{"sede": 1}"#), Err(Error::Config(_))));
        assert!(PipelineConfig::from_json(r#"{"train": {"learning_rate": 0.1}}"#).is_err());
    }

    #[test]
    fn task_class_mismatch() {
        let mut c = PipelineConfig::default();
        c.train.task = crate::train::TaskMode::Binary;
        assert!(c.validate().is_err());
        c.model.head.classes = 2;
        c.validate().unwrap();
    }
}
