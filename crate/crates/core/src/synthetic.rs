//! Synthetic Gaussian-blob datasets for experiments and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::FeatureDataset;
use crate::error::Result;

/// Blob layout: `num_labels` classes, each made of `sub_blobs` isotropic
/// Gaussian blobs in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub num_labels: usize,
    pub dim: usize,
    /// Distance between blob centers along their axis.
    pub separation: f32,
    pub std_dev: f32,
    /// Relative sizes of the sub-blobs of every class; one entry per
    /// sub-blob.
    pub sub_blob_weights: Vec<usize>,
}

impl BlobConfig {
    pub fn new(num_labels: usize, dim: usize, separation: f32, std_dev: f32) -> Self {
        Self {
            num_labels,
            dim,
            separation,
            std_dev,
            sub_blob_weights: vec![1],
        }
    }

    pub fn with_sub_blobs(mut self, weights: Vec<usize>) -> Self {
        self.sub_blob_weights = weights;
        self
    }

    fn blob_count(&self) -> usize {
        self.num_labels * self.sub_blob_weights.len()
    }

    /// Center of blob `b`: blobs are spread over coordinate axes, each axis
    /// carrying a positive and a negative slot, then further multiples.
    pub fn center(&self, blob: usize) -> Vec<f32> {
        let mut c = vec![0.0; self.dim];
        let slots = 2 * self.dim;
        let axis = (blob % slots) / 2;
        let sign = if blob.is_multiple_of(2) { 1.0 } else { -1.0 };
        let ring = (blob / slots + 1) as f32;
        c[axis] = sign * ring * self.separation;
        c
    }

    /// Draws `per_class` samples per class. Returns the dataset and the
    /// sub-blob index of every sample.
    pub fn sample(&self, per_class: usize, seed: u64) -> Result<(FeatureDataset, Vec<usize>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subs = self.sub_blob_weights.len();
        let total_weight: usize = self.sub_blob_weights.iter().sum();
        let centers: Vec<Vec<f32>> = (0..self.blob_count()).map(|b| self.center(b)).collect();
        let mut features = Vec::with_capacity(per_class * self.num_labels * self.dim);
        let mut labels = Vec::with_capacity(per_class * self.num_labels);
        let mut sub_index = Vec::with_capacity(per_class * self.num_labels);
        for class in 0..self.num_labels {
            // largest-remainder split of per_class over the sub-blobs
            let mut counts: Vec<usize> = self
                .sub_blob_weights
                .iter()
                .map(|&w| per_class * w / total_weight)
                .collect();
            let mut left = per_class - counts.iter().sum::<usize>();
            let mut s = 0;
            while left > 0 {
                counts[s % subs] += 1;
                left -= 1;
                s += 1;
            }
            for (sub, &count) in counts.iter().enumerate() {
                let center = &centers[class * subs + sub];
                for _ in 0..count {
                    for &c in center {
                        let z: f32 = rng.sample(StandardNormal);
                        features.push(c + self.std_dev * z);
                    }
                    labels.push(class);
                    sub_index.push(sub);
                }
            }
        }
        let data = FeatureDataset::new(features, self.dim, labels, self.num_labels)?;
        Ok((data, sub_index))
    }
}
