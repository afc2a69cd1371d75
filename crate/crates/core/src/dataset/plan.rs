use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::manifest::{load_manifest, ManifestEntry, NUM_GRADES};
use super::split::SplitManifest;
use crate::augment::{variant_kind, AugmentKind};
use crate::error::{Error, Result};

/// Auxiliary manifests whose whitelisted grades are appended to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeSpec {
    pub auxiliary: Vec<PathBuf>,
    pub categories: BTreeSet<u8>,
}

impl MergeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::param("merge category whitelist is empty"));
        }
        if let Some(g) = self.categories.iter().find(|&&g| usize::from(g) >= NUM_GRADES) {
            return Err(Error::param(format!("merge category {g} outside 0..=4")));
        }
        Ok(())
    }
}

/// Append whitelisted entries from already-loaded auxiliary sets to `base.train`.
pub fn merge_entries(base: &SplitManifest, auxiliary: &[Vec<ManifestEntry>], categories: &BTreeSet<u8>) -> Result<SplitManifest> {
    if categories.is_empty() {
        return Err(Error::param("merge category whitelist is empty"));
    }
    let mut out = base.clone();
    let mut ids: BTreeSet<String> = base.iter().map(|(e, _)| e.id.clone()).collect();
    for set in auxiliary {
        for e in set.iter().filter(|e| categories.contains(&e.grade)) {
            let mut e = e.clone();
            if !ids.insert(e.id.clone()) {
                let prefixed = format!("{}:{}", e.provenance.source, e.id);
                if !ids.insert(prefixed.clone()) {
                    return Err(Error::param(format!("merged id `{prefixed}` collides")));
                }
                e.id = prefixed;
            }
            out.train.push(e);
        }
    }
    Ok(out)
}

/// Load `spec.auxiliary` and merge into the training partition.
pub fn selective_merge(base: &SplitManifest, spec: &MergeSpec) -> Result<SplitManifest> {
    spec.validate()?;
    let aux = spec.auxiliary.iter().map(load_manifest).collect::<Result<Vec<_>>>()?;
    merge_entries(base, &aux, &spec.categories)
}

/// One planned training image: a source entry and the op producing variant `variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanItem {
    pub source: ManifestEntry,
    pub variant: usize,
    pub op: Option<AugmentKind>,
}

impl PlanItem {
    /// Entry for the produced image; originals keep their id.
    pub fn output_entry(&self, image_path: PathBuf) -> ManifestEntry {
        let mut e = self.source.clone();
        if let Some(op) = self.op {
            e.id = format!("{}_aug{}", self.source.id, self.variant);
            e.provenance.lineage = format!("aug{}:{}", self.variant, op.name());
        }
        e.image_path = image_path;
        e
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub items: Vec<PlanItem>,
}

impl AugmentationPlan {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn per_grade(&self) -> [u64; NUM_GRADES] {
        let mut c = [0; NUM_GRADES];
        for it in &self.items {
            c[usize::from(it.source.grade)] += 1;
        }
        c
    }
}

/// Training entries of `classes` expand to `multiplier` images (original plus
/// cycling ops); other entries pass through once. Val/test are never planned.
pub fn plan_selective_augmentation(split: &SplitManifest, classes: &BTreeSet<u8>, multiplier: usize) -> Result<AugmentationPlan> {
    if multiplier == 0 {
        return Err(Error::param("augmentation multiplier must be >= 1"));
    }
    if let Some(g) = classes.iter().find(|&&g| usize::from(g) >= NUM_GRADES) {
        return Err(Error::param(format!("unknown class id {g}")));
    }
    let mut items = Vec::new();
    for e in &split.train {
        let copies = if classes.contains(&e.grade) { multiplier } else { 1 };
        for v in 0..copies {
            items.push(PlanItem {
                source: e.clone(),
                variant: v,
                op: variant_kind(v),
            });
        }
    }
    Ok(AugmentationPlan { items })
}
