use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k×k` counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_labels(truths: &[usize], predictions: &[usize], k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::param(format!("confusion matrix needs k >= 2, got {k}")));
        }
        if truths.len() != predictions.len() {
            return Err(Error::param(format!(
                "{} truths vs {} predictions",
                truths.len(),
                predictions.len()
            )));
        }
        let mut counts = vec![0; k * k];
        for (i, (&t, &p)) in truths.iter().zip(predictions).enumerate() {
            if t >= k || p >= k {
                return Err(Error::param(format!(
                    "label out of range at index {i}: truth {t}, prediction {p}, k {k}"
                )));
            }
            counts[t * k + p] += 1;
        }
        Ok(Self { k, counts })
    }

    /// Build from row-major counts.
    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if k < 2 || counts.len() != k * k {
            return Err(Error::param(format!(
                "confusion matrix needs k >= 2 and k*k counts, got k={k}, {} counts",
                counts.len()
            )));
        }
        Ok(Self { k, counts })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::param("confusion matrix rows must be square"));
        }
        Self::from_counts(k, rows.concat())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-class true counts (class supports).
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.k).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.k)
            .map(|j| (0..self.k).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }
}
