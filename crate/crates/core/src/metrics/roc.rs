use serde::{Deserialize, Serialize};

use super::weighted_average;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive; the anchor uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

/// ROC curve with one point per distinct score (tied scores form one step),
/// anchored at (0,0) and ending at (1,1).
pub fn roc_curve(scores: &[f64], truths: &[bool]) -> Result<RocCurve> {
    if scores.len() != truths.len() {
        return Err(Error::param(format!(
            "{} scores vs {} labels",
            scores.len(),
            truths.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::numeric(format!("non-finite score at index {i}")));
    }
    let pos = truths.iter().filter(|&&t| t).count();
    let neg = truths.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::param("ROC needs both positive and negative samples"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truths[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(RocCurve { points })
}

pub fn auc(curve: &RocCurve) -> f64 {
    curve.auc()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucAverage {
    /// Weighted by true-class support.
    #[default]
    Weighted,
    Macro,
}

/// One-vs-rest ROC for every class of a `k`-way probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassRoc {
    /// `None` where the class is absent (or is the only class) in `truths`.
    pub per_class: Vec<Option<RocCurve>>,
    pub per_class_auc: Vec<Option<f64>>,
    pub supports: Vec<u64>,
    pub overall_auc: f64,
    pub average: AucAverage,
}

/// `probs` is row-major `[n, k]`.
pub fn one_vs_rest_roc(probs: &[f64], truths: &[usize], k: usize, average: AucAverage) -> Result<MulticlassRoc> {
    if k < 2 || probs.len() != truths.len() * k {
        return Err(Error::param(format!(
            "probability matrix of {} values does not match {} samples x {k} classes",
            probs.len(),
            truths.len()
        )));
    }
    if let Some(i) = truths.iter().position(|&t| t >= k) {
        return Err(Error::param(format!("label out of range at index {i}")));
    }
    let mut per_class = Vec::with_capacity(k);
    let mut supports = Vec::with_capacity(k);
    for c in 0..k {
        let labels: Vec<bool> = truths.iter().map(|&t| t == c).collect();
        let support = labels.iter().filter(|&&t| t).count();
        supports.push(support as u64);
        if support == 0 || support == truths.len() {
            per_class.push(None);
            continue;
        }
        let scores: Vec<f64> = probs.chunks(k).map(|r| r[c]).collect();
        per_class.push(Some(roc_curve(&scores, &labels)?));
    }
    let per_class_auc: Vec<Option<f64>> = per_class.iter().map(|c| c.as_ref().map(RocCurve::auc)).collect();
    let overall_auc = if k == 2 {
        // the two one-vs-rest curves are mirror images; report the positive class
        per_class_auc[1].ok_or_else(|| Error::param("ROC needs both classes present"))?
    } else {
        match average {
            AucAverage::Weighted => weighted_average(&per_class_auc, &supports)?,
            AucAverage::Macro => {
                let defined: Vec<f64> = per_class_auc.iter().flatten().copied().collect();
                if defined.is_empty() {
                    return Err(Error::param("no class has a defined ROC curve"));
                }
                defined.iter().sum::<f64>() / defined.len() as f64
            }
        }
    };
    Ok(MulticlassRoc {
        per_class,
        per_class_auc,
        supports,
        overall_auc,
        average,
    })
}
