//! Exact K-nearest-neighbor search and plurality voting over feature
//! embeddings.
//!
//! Distances are squared Euclidean, accumulated in `f64`. Equal distances are
//! ordered by training index. A plurality tie is resolved in favour of the
//! tied label with the smallest summed squared distance to the query, then the
//! smallest label index.

use rayon::prelude::*;

use crate::dataset::FeatureDataset;
use crate::distribution::LabelDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Label counts among the `k` nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborHistogram {
    counts: Vec<usize>,
    k: usize,
}

impl NeighborHistogram {
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I, num_labels: usize) -> Self {
        let mut counts = vec![0; num_labels];
        let mut k = 0;
        for y in labels {
            counts[y] += 1;
            k += 1;
        }
        Self { counts, k }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn to_distribution(&self) -> Result<LabelDistribution> {
        LabelDistribution::from_counts(&self.counts)
    }
}

#[inline]
pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn check_query(train: &FeatureDataset, query: &[f32], k: usize) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if query.len() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: query.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidNeighborhood(format!(
            "K={k} with {} training samples",
            train.len()
        )));
    }
    Ok(())
}

fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> std::cmp::Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.index.cmp(&b.index))
}

/// The `k` nearest training rows, ordered by `(distance, index)`.
pub fn neighbors(train: &FeatureDataset, query: &[f32], k: usize) -> Result<Vec<Neighbor>> {
    check_query(train, query, k)?;
    let mut all: Vec<Neighbor> = (0..train.len())
        .map(|index| Neighbor {
            index,
            distance: squared_distance(train.row(index), query),
        })
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_index);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_index);
    Ok(all)
}

/// Neighbor lists for every row of `queries`, computed in parallel.
pub fn neighbors_batch(
    train: &FeatureDataset,
    queries: &FeatureDataset,
    k: usize,
) -> Result<Vec<Vec<Neighbor>>> {
    if queries.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: queries.dim(),
        });
    }
    (0..queries.len())
        .into_par_iter()
        .map(|s| neighbors(train, queries.row(s), k))
        .collect()
}

/// Plurality vote over a neighbor list using `labels` (indexed by training
/// row).
pub fn vote(neighbors: &[Neighbor], labels: &[usize], num_labels: usize) -> usize {
    let mut counts = vec![0usize; num_labels];
    let mut dist_sum = vec![0.0f64; num_labels];
    for n in neighbors {
        let y = labels[n.index];
        counts[y] += 1;
        dist_sum[y] += n.distance;
    }
    (0..num_labels)
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then(dist_sum[b].total_cmp(&dist_sum[a]))
                .then(b.cmp(&a))
        })
        .expect("at least one label")
}

pub fn predict(train: &FeatureDataset, query: &[f32], k: usize) -> Result<usize> {
    let nbrs = neighbors(train, query, k)?;
    Ok(vote(&nbrs, train.labels(), train.num_labels()))
}

/// Fraction of `test` rows whose predicted label equals their label.
pub fn empirical_accuracy(train: &FeatureDataset, test: &FeatureDataset, k: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let nbrs = neighbors_batch(train, test, k)?;
    Ok(accuracy_from_neighbors(&nbrs, train.labels(), train.num_labels(), test.labels()))
}

/// Accuracy of votes over precomputed neighbor lists, with `train_labels`
/// possibly differing from the labels the lists were built against.
pub fn accuracy_from_neighbors(
    nbrs: &[Vec<Neighbor>],
    train_labels: &[usize],
    num_labels: usize,
    test_labels: &[usize],
) -> f64 {
    let hits: usize = nbrs
        .par_iter()
        .zip(test_labels.par_iter())
        .map(|(n, &y)| usize::from(vote(n, train_labels, num_labels) == y))
        .sum();
    hits as f64 / test_labels.len() as f64
}

/// Clean-label distribution of the `k`-neighborhood of `query`.
pub fn clean_distribution(
    train_clean: &FeatureDataset,
    query: &[f32],
    k: usize,
) -> Result<LabelDistribution> {
    let nbrs = neighbors(train_clean, query, k)?;
    NeighborHistogram::from_labels(
        nbrs.iter().map(|n| train_clean.label(n.index)),
        train_clean.num_labels(),
    )
    .to_distribution()
}

/// Symmetric chi-square distance `½ Σ (p−h)² / (p+h)`, skipping bins where
/// both are zero.
pub fn chi_square_distance(p: &LabelDistribution, h: &LabelDistribution) -> Result<f64> {
    if p.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: h.len(),
        });
    }
    let sum: f64 = p
        .probs()
        .iter()
        .zip(h.probs())
        .filter(|(a, b)| *a + *b > 0.0)
        .map(|(a, b)| (a - b).powi(2) / (a + b))
        .sum();
    Ok(0.5 * sum)
}

/// The `k` in `k_range` whose clean neighborhood histogram is closest to
/// `softmax` in chi-square distance; ties go to the smallest `k`.
pub fn preferred_k(
    softmax: &LabelDistribution,
    train_clean: &FeatureDataset,
    query: &[f32],
    k_range: &[usize],
) -> Result<(usize, f64)> {
    let max_k = *k_range.iter().max().ok_or(Error::Empty("K range"))?;
    if softmax.len() != train_clean.num_labels() {
        return Err(Error::DimensionMismatch {
            expected: train_clean.num_labels(),
            actual: softmax.len(),
        });
    }
    let nbrs = neighbors(train_clean, query, max_k)?;
    preferred_k_from_neighbors(softmax, &nbrs, train_clean.labels(), k_range)
}

pub(crate) fn preferred_k_from_neighbors(
    softmax: &LabelDistribution,
    nbrs: &[Neighbor],
    labels: &[usize],
    k_range: &[usize],
) -> Result<(usize, f64)> {
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.first() == Some(&0) {
        return Err(Error::InvalidNeighborhood("K must be at least 1".into()));
    }
    let mut counts = vec![0usize; softmax.len()];
    let mut filled = 0;
    let mut best: Option<(usize, f64)> = None;
    for k in ks {
        while filled < k {
            counts[labels[nbrs[filled].index]] += 1;
            filled += 1;
        }
        let h = LabelDistribution::from_counts(&counts)?;
        let d = chi_square_distance(softmax, &h)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.ok_or(Error::Empty("K range"))
}

/// Preferred `k` for every test row against its softmax row.
pub fn preferred_k_batch(
    softmax: &[LabelDistribution],
    train_clean: &FeatureDataset,
    test: &FeatureDataset,
    k_range: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if softmax.len() != test.len() {
        return Err(Error::DimensionMismatch {
            expected: test.len(),
            actual: softmax.len(),
        });
    }
    let max_k = *k_range.iter().max().ok_or(Error::Empty("K range"))?;
    let nbrs = neighbors_batch(train_clean, test, max_k)?;
    nbrs.par_iter()
        .zip(softmax.par_iter())
        .map(|(n, s)| {
            if s.len() != train_clean.num_labels() {
                return Err(Error::DimensionMismatch {
                    expected: train_clean.num_labels(),
                    actual: s.len(),
                });
            }
            preferred_k_from_neighbors(s, n, train_clean.labels(), k_range)
        })
        .collect()
}
