//! Manifests, the stratified split, selective merging and augmentation planning.

pub mod manifest;
pub mod plan;
pub mod split;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use manifest::{
    load_manifest, load_manifest_rows, save_manifest_rows, LoadedRow, ManifestEntry, Provenance, Split, NUM_GRADES,
};
pub use plan::{merge_entries, plan_selective_augmentation, selective_merge, AugmentationPlan, MergeSpec, PlanItem};
pub use split::{stratified_split, to_binary_labels, SplitFractions, SplitManifest};

use crate::error::{Error, Result};
use crate::plot;

pub const GRADE_NAMES: [&str; NUM_GRADES] = ["No DR", "Mild", "Moderate", "Severe", "Proliferative DR"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub grades: [u64; NUM_GRADES],
    /// `[no DR, DR]`.
    pub binary: [u64; 2],
}

impl ClassHistogram {
    pub fn total(&self) -> u64 {
        self.grades.iter().sum()
    }

    pub fn svg(&self, title: &str) -> String {
        let labels: Vec<String> = (0..NUM_GRADES).map(|g| format!("{g} {}", GRADE_NAMES[g])).collect();
        let values: Vec<f64> = self.grades.iter().map(|&c| c as f64).collect();
        plot::bar_chart(title, &labels, &values, "images")
    }
}

pub fn class_distribution_report(entries: &[ManifestEntry]) -> ClassHistogram {
    let mut h = ClassHistogram::default();
    for e in entries {
        h.grades[usize::from(e.grade)] += 1;
        h.binary[usize::from(e.binary_label())] += 1;
    }
    h
}

/// Histograms of every partition, plus per-source counts of the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub train: ClassHistogram,
    pub val: ClassHistogram,
    pub test: ClassHistogram,
    pub train_by_source: std::collections::BTreeMap<String, ClassHistogram>,
}

impl DistributionReport {
    pub fn of(split: &SplitManifest) -> Self {
        let mut by_source = std::collections::BTreeMap::<String, Vec<ManifestEntry>>::new();
        for e in &split.train {
            by_source.entry(e.provenance.source.clone()).or_default().push(e.clone());
        }
        Self {
            train: class_distribution_report(&split.train),
            val: class_distribution_report(&split.val),
            test: class_distribution_report(&split.test),
            train_by_source: by_source.iter().map(|(k, v)| (k.clone(), class_distribution_report(v))).collect(),
        }
    }

    /// Write `<stem>.json` and `<stem>_<part>.svg` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        let body = serde_json::to_string_pretty(self).map_err(|e| Error::numeric(e.to_string()))?;
        std::fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
        for (name, h) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let p = dir.join(format!("{stem}_{name}.svg"));
            std::fs::write(&p, h.svg(&format!("Class distribution: {name}"))).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_sums() {
        assert_eq!(class_distribution_report(&[]), ClassHistogram::default());
        let e: Vec<_> = [0u8, 0, 2, 4, 1]
            .iter()
            .enumerate()
            .map(|(i, &g)| ManifestEntry::new(i.to_string(), "p", g, "s").unwrap())
            .collect();
        let h = class_distribution_report(&e);
        assert_eq!(h.grades, [2, 1, 1, 0, 1]);
        assert_eq!(h.binary, [2, 3]);
        assert_eq!(h.total(), 5);
        assert!(h.svg("x").contains("Proliferative"));
    }
}
