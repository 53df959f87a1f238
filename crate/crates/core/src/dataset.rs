use crate::error::{Error, Result};

/// `N × D` row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Vec<f32>,
    dim: usize,
    labels: Vec<usize>,
    num_labels: usize,
}

impl FeatureDataset {
    pub fn new(features: Vec<f32>, dim: usize, labels: Vec<usize>, num_labels: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension is zero".into()));
        }
        if num_labels == 0 {
            return Err(Error::InvalidDataset("no labels".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values for {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        check_labels(&labels, num_labels)?;
        Ok(Self {
            features,
            dim,
            labels,
            num_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Same features with a different label vector.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: labels.len(),
            });
        }
        check_labels(&labels, self.num_labels)?;
        Ok(Self {
            features: self.features.clone(),
            dim: self.dim,
            labels,
            num_labels: self.num_labels,
        })
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_labels: self.num_labels,
        }
    }
}

pub(crate) fn check_labels(labels: &[usize], num_labels: usize) -> Result<()> {
    match labels.iter().position(|&y| y >= num_labels) {
        Some(index) => Err(Error::LabelOutOfRange {
            index,
            label: labels[index],
            num_labels,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_labels_and_values() {
        assert!(FeatureDataset::new(vec![0.0; 6], 2, vec![0, 1, 1], 2).is_ok());
        assert!(FeatureDataset::new(vec![0.0; 5], 2, vec![0, 1, 1], 2).is_err());
        assert!(matches!(
            FeatureDataset::new(vec![0.0; 6], 2, vec![0, 2, 1], 2),
            Err(Error::LabelOutOfRange { index: 1, .. })
        ));
        assert!(FeatureDataset::new(vec![0.0, f32::NAN], 2, vec![0], 2).is_err());
    }

    #[test]
    fn subset_and_relabel() {
        let d = FeatureDataset::new(vec![0.0, 1.0, 2.0, 3.0], 2, vec![0, 1], 2).unwrap();
        let s = d.subset(&[1]);
        assert_eq!(s.row(0), &[2.0, 3.0]);
        assert_eq!(s.labels(), &[1]);
        assert!(d.with_labels(vec![1, 1]).is_ok());
        assert!(d.with_labels(vec![1]).is_err());
    }
}
