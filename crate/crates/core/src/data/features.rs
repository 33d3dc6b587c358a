use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw input frames `x[T_input, input_dim]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub id: String,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureSequence {
    pub fn new(id: impl Into<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::shape("feature sequence", &[dim], &[values.len()]));
        }
        Ok(FeatureSequence { id: id.into(), dim, values })
    }

    pub fn frames(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Frames of `self` followed by frames of `other`.
    pub fn concat(&self, other: &FeatureSequence, id: impl Into<String>) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::shape("feature concat", &[self.dim], &[other.dim]));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(id, self.dim, values)
    }
}
