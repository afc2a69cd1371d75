//! Ordinal-classification metrics: confusion matrices, quadratic weighted
//! kappa, one-vs-rest rates with support-weighted averaging, and ROC/AUC.
//!
//! Rates with a zero denominator are reported as absent (`None`) and left out
//! of averages instead of being coerced to zero.

mod confusion;
mod kappa;
mod rates;
mod roc;

pub use confusion::ConfusionMatrix;
pub use kappa::{qwk, KappaWeights};
pub use rates::{
    binary_rates, binary_rates_with, weighted_average, BinaryCounts, BinaryRates, SpecificityConvention,
};
pub use roc::{auc, one_vs_rest_roc, roc_curve, AucAverage, MulticlassRoc, RocCurve, RocPoint};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: u64,
    pub counts: BinaryCounts,
    #[serde(flatten)]
    pub rates: BinaryRates,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    /// Fraction of samples on the diagonal.
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    /// `None` when kappa is undefined for this matrix.
    pub qwk: Option<f64>,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub samples: u64,
    pub specificity_convention: SpecificityConvention,
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassMetrics>,
    pub overall: OverallMetrics,
    /// For binary tasks: rates of class 1 taken as the positive label.
    pub positive_class: Option<BinaryRates>,
    /// Human-readable notes on absent (undefined) values.
    pub absent: Vec<String>,
}

pub fn per_class_report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    per_class_report_with(cm, SpecificityConvention::Standard)
}

/// Reduce each class one-vs-rest and average by true-class support.
pub fn per_class_report_with(cm: &ConfusionMatrix, spec: SpecificityConvention) -> Result<MetricsReport> {
    let k = cm.k();
    let supports = cm.row_sums();
    let mut per_class = Vec::with_capacity(k);
    let mut absent = Vec::new();
    for c in 0..k {
        let counts = BinaryCounts::one_vs_rest(cm, c);
        let rates = binary_rates_with(&counts, spec);
        for (name, v) in [
            ("precision", rates.precision),
            ("sensitivity", rates.sensitivity),
            ("specificity", rates.specificity),
            ("f1", rates.f1),
        ] {
            if v.is_none() {
                absent.push(format!("class {c} {name} undefined (zero denominator)"));
            }
        }
        per_class.push(ClassMetrics {
            class: c,
            support: supports[c],
            counts,
            rates,
            auc: None,
        });
    }
    let avg = |f: fn(&BinaryRates) -> Option<f64>| -> Option<f64> {
        let vals: Vec<Option<f64>> = per_class.iter().map(|m| f(&m.rates)).collect();
        weighted_average(&vals, &supports).ok()
    };
    let total = cm.total();
    let kappa = match qwk(cm) {
        Ok(v) => Some(v),
        Err(e) => {
            absent.push(format!("qwk undefined: {e}"));
            None
        }
    };
    let overall = OverallMetrics {
        accuracy: if total > 0 { cm.trace() as f64 / total as f64 } else { 0.0 },
        precision: avg(|r| r.precision),
        sensitivity: avg(|r| r.sensitivity),
        specificity: avg(|r| r.specificity),
        f1: avg(|r| r.f1),
        qwk: kappa,
        auc: None,
    };
    Ok(MetricsReport {
        k,
        samples: total,
        specificity_convention: spec,
        confusion: cm.rows(),
        positive_class: (k == 2).then(|| per_class[1].rates),
        per_class,
        overall,
        absent,
    })
}

impl MetricsReport {
    /// Fill per-class and overall AUC from a one-vs-rest ROC analysis.
    pub fn attach_roc(&mut self, roc: &MulticlassRoc) {
        for (m, a) in self.per_class.iter_mut().zip(&roc.per_class_auc) {
            m.auc = *a;
        }
        self.overall.auc = Some(roc.overall_auc);
    }
}
