//! Shared fixtures for the benchmarks.

use plurality_core::synthetic::BlobConfig;
use plurality_core::FeatureDataset;

/// Ten well-separated 16-dimensional blobs, `per_class` samples each.
pub fn blob_split(per_class: usize, seed: u64) -> FeatureDataset {
    BlobConfig::new(10, 16, 12.0, 1.0)
        .sample(per_class, seed)
        .expect("valid blob config")
        .0
}
