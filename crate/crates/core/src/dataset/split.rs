use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::{ManifestEntry, Split, NUM_GRADES};
use crate::error::{Error, Result};
use crate::rng::RngState;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<ManifestEntry>,
    pub val: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
}

impl SplitManifest {
    pub fn part(&self, s: Split) -> &[ManifestEntry] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn part_mut(&mut self, s: Split) -> &mut Vec<ManifestEntry> {
        match s {
            Split::Train => &mut self.train,
            Split::Val => &mut self.val,
            Split::Test => &mut self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ManifestEntry, Split)> {
        Split::ALL.into_iter().flat_map(move |s| self.part(s).iter().map(move |e| (e, s)))
    }
}

/// Train/val/test fractions. Val and test sizes are floored per class; train
/// takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) || ((f.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("split fractions {f:?} must be in [0,1] and sum to 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for a class of `n` entries.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        if n < 3 {
            return (n, 0, 0);
        }
        // tolerance guards products like 0.1·190 landing just under an integer
        let floor = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let val = floor(self.val);
        let test = floor(self.test).min(n - val);
        (n - val - test, val, test)
    }
}

/// Per-grade stratified split. Membership comes from a seeded shuffle of the
/// class (ordered by id first, so input order does not matter); each partition
/// keeps input order.
pub fn stratified_split(entries: &[ManifestEntry], fractions: SplitFractions, rng: &RngState) -> Result<SplitManifest> {
    fractions.validate()?;
    let mut assign = vec![Split::Train; entries.len()];
    for g in 0..NUM_GRADES as u8 {
        let mut idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].grade == g).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 3 {
            log::warn!("grade {g} has only {} entries; all assigned to train", idx.len());
        }
        let (_, nv, nt) = fractions.sizes(idx.len());
        idx.sort_by(|&a, &b| entries[a].id.cmp(&entries[b].id));
        idx.shuffle(&mut rng.child(format!("grade{g}")).generator());
        for &i in &idx[..nv] {
            assign[i] = Split::Val;
        }
        for &i in &idx[nv..nv + nt] {
            assign[i] = Split::Test;
        }
    }
    let mut out = SplitManifest::default();
    for (e, s) in entries.iter().zip(assign) {
        out.part_mut(s).push(e.clone());
    }
    Ok(out)
}

/// Copies with grades collapsed to 0 (no DR) / 1 (any DR). Idempotent.
pub fn to_binary_labels(entries: &[ManifestEntry]) -> Vec<ManifestEntry> {
    entries
        .iter()
        .map(|e| ManifestEntry {
            grade: e.binary_label(),
            ..e.clone()
        })
        .collect()
}
