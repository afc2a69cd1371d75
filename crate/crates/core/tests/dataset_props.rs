use std::collections::{BTreeSet, HashSet};

use drgrade::dataset::{
    load_manifest_rows, merge_entries, plan_selective_augmentation, save_manifest_rows, stratified_split, ManifestEntry,
    SplitFractions,
};
use drgrade::rng::RngState;
use proptest::prelude::*;

fn entries(counts: &[usize]) -> Vec<ManifestEntry> {
    let mut out = Vec::new();
    for (g, &n) in counts.iter().enumerate() {
        for i in 0..n {
            out.push(ManifestEntry::new(format!("g{g}_{i:04}"), format!("img/g{g}_{i}.png"), g as u8, "base").unwrap());
        }
    }
    out
}

fn ids(v: &[ManifestEntry]) -> Vec<String> {
    v.iter().map(|e| e.id.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_and_is_stratified(counts in prop::collection::vec(0usize..60, 5), seed in any::<u64>()) {
        let all = entries(&counts);
        let f = SplitFractions::default();
        let s = stratified_split(&all, f, &RngState::new(seed, "split")).unwrap();
        let mut seen: Vec<String> = s.iter().map(|(e, _)| e.id.clone()).collect();
        prop_assert_eq!(seen.len(), all.len());
        seen.sort();
        let mut want = ids(&all);
        want.sort();
        prop_assert_eq!(seen, want);
        for (g, &n) in counts.iter().enumerate() {
            let c = |v: &[ManifestEntry]| v.iter().filter(|e| usize::from(e.grade) == g).count();
            let (tr, va, te) = f.sizes(n);
            prop_assert_eq!((c(&s.train), c(&s.val), c(&s.test)), (tr, va, te));
        }
    }

    #[test]
    fn split_ignores_input_order(counts in prop::collection::vec(0usize..30, 5), seed in any::<u64>()) {
        let all = entries(&counts);
        let mut rev = all.clone();
        rev.reverse();
        let rng = RngState::new(seed, "split");
        let a = stratified_split(&all, SplitFractions::default(), &rng).unwrap();
        let b = stratified_split(&rev, SplitFractions::default(), &rng).unwrap();
        let set = |v: &[ManifestEntry]| ids(v).into_iter().collect::<BTreeSet<_>>();
        prop_assert_eq!(set(&a.train), set(&b.train));
        prop_assert_eq!(set(&a.test), set(&b.test));
    }

    #[test]
    fn plan_size_arithmetic(counts in prop::collection::vec(0usize..40, 5), mult in 1usize..12, mask in 0u8..32) {
        let all = entries(&counts);
        let s = stratified_split(&all, SplitFractions::default(), &RngState::new(0, "split")).unwrap();
        let classes: BTreeSet<u8> = (0..5).filter(|g| mask & (1 << g) != 0).collect();
        let plan = plan_selective_augmentation(&s, &classes, mult).unwrap();
        let want: usize = s.train.iter().map(|e| if classes.contains(&e.grade) { mult } else { 1 }).sum();
        prop_assert_eq!(plan.len(), want);
        let out: HashSet<String> = plan.items.iter().map(|it| it.output_entry("x".into()).id).collect();
        prop_assert_eq!(out.len(), plan.len());
    }

    #[test]
    fn merge_only_whitelisted(aux_counts in prop::collection::vec(0usize..10, 5), mask in 0u8..32) {
        let base = stratified_split(&entries(&[20, 10, 10, 10, 10]), SplitFractions::default(), &RngState::new(1, "s")).unwrap();
        let aux: Vec<ManifestEntry> = entries(&aux_counts)
            .into_iter()
            .map(|mut e| { e.provenance.source = "aux".into(); e })
            .collect();
        let cats: BTreeSet<u8> = (0..5).filter(|g| mask & (1 << g) != 0).collect();
        if cats.is_empty() {
            prop_assert!(merge_entries(&base, &[aux], &cats).is_err());
            return Ok(());
        }
        let merged = merge_entries(&base, &[aux.clone()], &cats).unwrap();
        prop_assert_eq!(&merged.val, &base.val);
        prop_assert_eq!(&merged.test, &base.test);
        let added: Vec<&ManifestEntry> = merged.train.iter().filter(|e| e.provenance.source == "aux").collect();
        prop_assert_eq!(added.len(), aux.iter().filter(|e| cats.contains(&e.grade)).count());
        let unique: HashSet<&str> = merged.train.iter().map(|e| e.id.as_str()).collect();
        prop_assert_eq!(unique.len(), merged.train.len());
    }
}

#[test]
fn manifest_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let all = entries(&[3, 2, 1, 1, 1]);
    let s = stratified_split(&all, SplitFractions::default(), &RngState::new(2, "s")).unwrap();
    let path = dir.path().join("m.csv");
    save_manifest_rows(&path, s.iter().map(|(e, p)| (e, Some(p)))).unwrap();
    let rows = load_manifest_rows(&path).unwrap();
    assert_eq!(rows.len(), all.len());
    for (row, (e, p)) in rows.iter().zip(s.iter()) {
        assert_eq!(row.entry.id, e.id);
        assert_eq!(row.entry.grade, e.grade);
        assert_eq!(row.split, Some(p));
        assert_eq!(row.entry.provenance, e.provenance);
    }
}

#[test]
fn bad_manifest_rows_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "id_code,diagnosis\na,0\nb,7\n").unwrap();
    let err = load_manifest_rows(&path).unwrap_err().to_string();
    assert!(err.contains(":3:"), "{err}");
    std::fs::write(&path, "id_code,diagnosis\na,0\na,1\n").unwrap();
    assert!(load_manifest_rows(&path).unwrap_err().to_string().contains("duplicate"));
}
