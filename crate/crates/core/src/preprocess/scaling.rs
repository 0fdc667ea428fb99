use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-feature min-max bounds fitted on a training partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Fits bounds over the finite values of each column; non-finite entries
/// are ignored.
pub fn fit_min_max(columns: &[&[f64]]) -> Result<ScalerParams> {
    let mut min = Vec::with_capacity(columns.len());
    let mut max = Vec::with_capacity(columns.len());
    for (i, col) in columns.iter().enumerate() {
        let (lo, hi) = col
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Err(Error::DegenerateInput(format!("feature {i} has no finite values")));
        }
        min.push(lo);
        max.push(hi);
    }
    Ok(ScalerParams {
        feature_names: Vec::new(),
        min,
        max,
    })
}

impl ScalerParams {
    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// True when the feature was constant on the training data.
    pub fn is_degenerate(&self, feature: usize) -> bool {
        self.max[feature] == self.min[feature]
    }

    pub fn degenerate_features(&self) -> Vec<usize> {
        (0..self.len()).filter(|&f| self.is_degenerate(f)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// `(x − min) / (max − min)`, unclamped. Degenerate features map to 0.
    #[inline]
    pub fn apply(&self, feature: usize, x: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range == 0.0 {
            0.0
        } else {
            (x - self.min[feature]) / range
        }
    }

    #[inline]
    pub fn invert(&self, feature: usize, y: f64) -> f64 {
        y * (self.max[feature] - self.min[feature]) + self.min[feature]
    }
}

/// `sign(x)·|x|^(1/3)`.
#[inline]
pub fn signed_cube_root(x: f64) -> f64 {
    x.cbrt()
}

#[inline]
pub fn cube(y: f64) -> f64 {
    y * y * y
}
