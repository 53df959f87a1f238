//! Probability vectors over labels and row-stochastic corruption matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for "sums to one" checks.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `L` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_probability_row(&probs).map_err(Error::InvalidDistribution)?;
        Ok(Self { probs })
    }

    /// All mass on `label`.
    pub fn point_mass(num_labels: usize, label: usize) -> Result<Self> {
        if label >= num_labels {
            return Err(Error::InvalidDistribution(format!(
                "point mass on label {label} with only {num_labels} labels"
            )));
        }
        let mut probs = vec![0.0; num_labels];
        probs[label] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(num_labels: usize) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::InvalidDistribution("no labels".into()));
        }
        Ok(Self {
            probs: vec![1.0 / num_labels as f64; num_labels],
        })
    }

    /// Normalizes non-negative counts into a distribution.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect();
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Returns the distribution with labels relabeled so that new index `i`
    /// holds old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: perm.len(),
            });
        }
        Self::new(perm.iter().map(|&p| self.probs[p]).collect())
    }
}

impl TryFrom<Vec<f64>> for LabelDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<LabelDistribution> for Vec<f64> {
    fn from(d: LabelDistribution) -> Self {
        d.probs
    }
}

fn validate_probability_row(row: &[f64]) -> std::result::Result<(), String> {
    if row.is_empty() {
        return Err("empty probability vector".into());
    }
    if let Some((i, p)) = row
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(format!("entry {i} is {p}, not a finite non-negative value"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(format!("entries sum to {sum}, not 1"));
    }
    Ok(())
}

/// Row-stochastic `L × L` matrix; entry `(k, j)` is the probability that a
/// corrupted sample with clean label `k` receives label `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CorruptionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != size {
                return Err(Error::InvalidMatrixRow {
                    row,
                    reason: format!("has {} entries, expected {size}", values.len()),
                });
            }
            validate_probability_row(&values)
                .map_err(|reason| Error::InvalidMatrixRow { row, reason })?;
            entries.extend(values);
        }
        Ok(Self { size, entries })
    }

    /// All entries `1/L`.
    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        Ok(Self {
            size,
            entries: vec![1.0 / size as f64; size * size],
        })
    }

    /// Permutation matrix sending label `k` to `map[k]`.
    pub fn permutation(map: &[usize]) -> Result<Self> {
        let size = map.len();
        if size == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let mut seen = vec![false; size];
        for (k, &target) in map.iter().enumerate() {
            if target >= size {
                return Err(Error::InvalidMatrixRow {
                    row: k,
                    reason: format!("flip target {target} is outside [0, {size})"),
                });
            }
            if std::mem::replace(&mut seen[target], true) {
                return Err(Error::InvalidMatrixRow {
                    row: k,
                    reason: format!("flip target {target} is used twice"),
                });
            }
        }
        let mut entries = vec![0.0; size * size];
        for (k, &target) in map.iter().enumerate() {
            entries[k * size + target] = 1.0;
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.size)
    }
}
