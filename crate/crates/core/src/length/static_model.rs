use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Segmentation;

/// `p(Δt | a) = exp(-|μ_a - Δt|) / Z_a` on `1 ≤ Δt ≤ δ_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticLengthTable {
    mu: Vec<f64>,
    delta_max: usize,
    log_z: Vec<f64>,
}

impl StaticLengthTable {
    pub fn from_means(mu: Vec<f64>, delta_max: usize) -> Result<Self> {
        if delta_max == 0 {
            return Err(Error::Config("delta_max must be at least 1".into()));
        }
        let log_z =
            mu.iter().map(|&m| (1..=delta_max).map(|dt| (-(m - dt as f64).abs()).exp()).sum::<f64>().ln()).collect();
        Ok(StaticLengthTable { mu, delta_max, log_z })
    }

    /// Mean segment length per label over `alignments`; labels never seen get the global mean.
    pub fn estimate<'a, I>(alignments: I, num_labels: usize, delta_max: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [usize], &'a Segmentation)>,
    {
        let mut sums = vec![0.0; num_labels];
        let mut counts = vec![0usize; num_labels];
        for (labels, seg) in alignments {
            for (&a, len) in labels.iter().zip(seg.lengths()) {
                if a >= num_labels {
                    return Err(Error::LabelOutOfRange { label: a, vocab: num_labels });
                }
                sums[a] += len as f64;
                counts[a] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        let global = sums.iter().sum::<f64>() / total as f64;
        let mu = sums.iter().zip(&counts).map(|(&s, &n)| if n == 0 { global } else { s / n as f64 }).collect();
        Self::from_means(mu, delta_max)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    pub fn z(&self, label: usize) -> f64 {
        self.log_z[label].exp()
    }

    /// `-∞` outside `[1, δ_max]` or for labels outside the table.
    pub fn log_prob(&self, label: usize, dt: usize) -> f64 {
        if dt == 0 || dt > self.delta_max || label >= self.mu.len() {
            return f64::NEG_INFINITY;
        }
        -(self.mu[label] - dt as f64).abs() - self.log_z[label]
    }
}
