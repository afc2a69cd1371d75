use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// One-vs-rest reduction of `cm` with `class` as the positive label.
    pub fn one_vs_rest(cm: &ConfusionMatrix, class: usize) -> Self {
        let tp = cm.get(class, class);
        let fn_ = cm.row_sums()[class] - tp;
        let fp = cm.col_sums()[class] - tp;
        let tn = cm.total() - tp - fn_ - fp;
        Self { tp, tn, fp, fn_ }
    }
}

/// How specificity is computed.
///
/// `Standard` is `TN/(TN+FP)`, the proportion of actual negatives identified.
/// `TnOverTnFn` reproduces the `TN/(TN+FN)` form that appears in some
/// reports, kept for side-by-side comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecificityConvention {
    #[default]
    Standard,
    TnOverTnFn,
}

/// Rates from one set of binary counts. `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryRates {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn binary_rates(bc: &BinaryCounts) -> BinaryRates {
    binary_rates_with(bc, SpecificityConvention::Standard)
}

pub fn binary_rates_with(bc: &BinaryCounts, spec: SpecificityConvention) -> BinaryRates {
    let precision = ratio(bc.tp, bc.tp + bc.fp);
    let sensitivity = ratio(bc.tp, bc.tp + bc.fn_);
    let specificity = match spec {
        SpecificityConvention::Standard => ratio(bc.tn, bc.tn + bc.fp),
        SpecificityConvention::TnOverTnFn => ratio(bc.tn, bc.tn + bc.fn_),
    };
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    BinaryRates {
        accuracy: ratio(bc.tp + bc.tn, bc.total()),
        precision,
        sensitivity,
        specificity,
        f1,
    }
}

/// Support-weighted mean over the classes whose value is defined.
pub fn weighted_average(values: &[Option<f64>], supports: &[u64]) -> Result<f64> {
    if values.len() != supports.len() {
        return Err(Error::param(format!(
            "{} values vs {} supports",
            values.len(),
            supports.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0u64;
    for (v, &s) in values.iter().zip(supports) {
        if let Some(v) = v {
            num += v * s as f64;
            den += s;
        }
    }
    if den == 0 {
        return Err(Error::numeric("weighted average has no defined value with positive support"));
    }
    Ok(num / den as f64)
}
