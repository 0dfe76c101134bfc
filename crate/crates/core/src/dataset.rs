//! Point clouds with optional inlier/outlier labels, and the ground truth
//! that diagnostics are measured against.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RsrError};
use crate::spectral::SubspaceBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Outlier,
    Inlier,
}

/// `D×N` points stored column-wise. Every column is nonzero and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
    labels: Option<Vec<Label>>,
}

impl Dataset {
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<Label>>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(RsrError::InvalidDataset("dataset is empty".into()));
        }
        if let Some(l) = &labels {
            if l.len() != points.ncols() {
                return Err(RsrError::InvalidDataset(format!("{} labels for {} points", l.len(), points.ncols())));
            }
        }
        for (i, col) in points.column_iter().enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(RsrError::InvalidDataset(format!("point {i} is not finite")));
            }
            if col.norm() == 0.0 {
                return Err(RsrError::InvalidDataset(format!("point {i} is zero")));
            }
        }
        Ok(Dataset { points, labels })
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        Dataset::new(self.points.clone(), Some(labels))
    }

    /// Multiplies every point by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Dataset::new(&self.points * lambda, self.labels.clone())
    }

    /// Maps every point `x` to `A x`.
    pub fn transformed(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() != self.ambient_dim() {
            return Err(RsrError::DimensionError(format!(
                "transform has {} columns, points have {} coordinates",
                a.ncols(),
                self.ambient_dim()
            )));
        }
        Dataset::new(a * &self.points, self.labels.clone())
    }

    /// The columns whose label is `which`, in dataset order.
    pub fn select(&self, labels: &[Label], which: Label) -> Result<DMatrix<f64>> {
        if labels.len() != self.len() {
            return Err(RsrError::InvalidDataset("label count does not match".into()));
        }
        let idx: Vec<usize> = (0..self.len()).filter(|&i| labels[i] == which).collect();
        Ok(self.points.select_columns(idx.iter()))
    }
}

/// Counts `(n1, n0)` of inliers and outliers.
pub fn label_counts(labels: &[Label]) -> (usize, usize) {
    let n1 = labels.iter().filter(|&&l| l == Label::Inlier).count();
    (n1, labels.len() - n1)
}

/// The underlying subspace `L*`, the labels, and the cone-noise level if any.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub basis: SubspaceBasis,
    pub labels: Vec<Label>,
    pub noise_epsilon: Option<f64>,
}

impl GroundTruth {
    pub fn new(basis: SubspaceBasis, labels: Vec<Label>, noise_epsilon: Option<f64>) -> Result<Self> {
        if let Some(e) = noise_epsilon {
            if !(e >= 0.0) {
                return Err(RsrError::InvalidDataset(format!("noise epsilon must be >= 0, got {e}")));
            }
        }
        Ok(GroundTruth { basis, labels, noise_epsilon })
    }

    pub fn counts(&self) -> (usize, usize) {
        label_counts(&self.labels)
    }

    /// Fails unless the truth matches the dataset's size and dimension.
    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.labels.len() != data.len() {
            return Err(RsrError::InvalidDataset(format!(
                "ground truth has {} labels for {} points",
                self.labels.len(),
                data.len()
            )));
        }
        if self.basis.ambient_dim() != data.ambient_dim() {
            return Err(RsrError::DimensionError(format!(
                "ground truth lives in R^{} but data in R^{}",
                self.basis.ambient_dim(),
                data.ambient_dim()
            )));
        }
        Ok(())
    }
}
