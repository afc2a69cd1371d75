//! Stratified 70/10/20 split of a five-grade cohort and the resulting augmentation plans.

use std::collections::BTreeSet;

use drgrade::dataset::{class_distribution_report, plan_selective_augmentation, stratified_split, ManifestEntry, SplitFractions};
use drgrade::rng::RngState;

fn main() -> drgrade::Result<()> {
    let sizes = [1805usize, 370, 999, 193, 295];
    let mut entries = Vec::new();
    for (g, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            entries.push(ManifestEntry::new(format!("g{g}_{i:04}"), format!("images/g{g}_{i}.png"), g as u8, "cohort")?);
        }
    }
    let split = stratified_split(&entries, SplitFractions::default(), &RngState::new(0, "split"))?;
    for (name, part) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let h = class_distribution_report(part);
        println!("{name:>5}: {:?} total {} binary {:?}", h.grades, h.total(), h.binary);
    }
    let all: BTreeSet<u8> = (0..5).collect();
    let minority: BTreeSet<u8> = (1..5).collect();
    for (label, classes) in [("all grades", &all), ("grades 1-4", &minority)] {
        let plan = plan_selective_augmentation(&split, classes, 10)?;
        println!("x10 on {label}: {} training images", plan.len());
    }
    Ok(())
}
