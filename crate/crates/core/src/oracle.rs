//! Brute-force references for the analytic and K-NN paths.
//!
//! Nothing here shares code with [`crate::plurality`] or [`crate::knn`]
//! beyond the input types.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::FeatureDataset;
use crate::distribution::LabelDistribution;
use crate::error::{Error, Result};
use crate::plurality::NeighborhoodSpec;

pub const DEFAULT_STRING_BUDGET: u128 = 100_000_000;

/// Probability mass of all `L^K` label strings, split by outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    /// Mass of strings where the correct label is the strict plurality.
    pub q_correct: f64,
    /// Mass of strings with no strict plurality.
    pub tie_mass: f64,
    /// Mass of strings won by each label; the correct label's entry equals
    /// `q_correct`.
    pub per_label_mass: Vec<f64>,
}

impl EnumerationResult {
    pub fn total(&self) -> f64 {
        self.tie_mass + self.per_label_mass.iter().sum::<f64>()
    }
}

pub fn enumerate_accuracy(spec: &NeighborhoodSpec, q: &LabelDistribution) -> Result<EnumerationResult> {
    enumerate_accuracy_with_budget(spec, q, DEFAULT_STRING_BUDGET)
}

/// Walks every label string with an odometer and classifies it by its strict
/// plurality winner.
pub fn enumerate_accuracy_with_budget(
    spec: &NeighborhoodSpec,
    q: &LabelDistribution,
    budget: u128,
) -> Result<EnumerationResult> {
    let k = spec.k();
    let l = spec.num_labels();
    if q.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            actual: q.len(),
        });
    }
    let strings = (l as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if strings > budget {
        return Err(Error::BudgetExceeded { strings, budget });
    }
    let probs = q.probs();
    let mut digits = vec![0usize; k];
    let mut counts = vec![0usize; l];
    let mut per_label = vec![0.0; l];
    let mut tie_mass = 0.0;
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut p = 1.0;
        for &d in &digits {
            counts[d] += 1;
            p *= probs[d];
        }
        let best = *counts.iter().max().expect("at least one label");
        let mut winners = counts.iter().enumerate().filter(|(_, &c)| c == best);
        let first = winners.next().map(|(j, _)| j).expect("max exists");
        if winners.next().is_none() {
            per_label[first] += p;
        } else {
            tie_mass += p;
        }

        // odometer increment
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(EnumerationResult {
                    q_correct: per_label[spec.correct_label()],
                    tie_mass,
                    per_label_mass: per_label,
                });
            }
            digits[pos] += 1;
            if digits[pos] < l {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Reference K-NN prediction: full distance scan, full sort, plurality vote.
///
/// Ties in distance are ordered by training index. A plurality tie goes to
/// the tied label whose neighbors have the smallest summed squared distance,
/// then to the smallest label.
pub fn knn_reference_predict(train: &FeatureDataset, query: &[f32], k: usize) -> Result<usize> {
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
    let mut all: Vec<(f64, usize)> = (0..train.len())
        .map(|i| {
            let d = train
                .row(i)
                .iter()
                .zip(query)
                .map(|(&a, &b)| {
                    let diff = f64::from(a) - f64::from(b);
                    diff * diff
                })
                .sum::<f64>();
            (d, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut counts = vec![0usize; train.num_labels()];
    let mut dist_sum = vec![0.0f64; train.num_labels()];
    for &(d, i) in &all[..k] {
        let label = train.label(i);
        counts[label] += 1;
        dist_sum[label] += d;
    }
    let mut best = 0;
    for label in 1..counts.len() {
        let better = counts[label] > counts[best]
            || (counts[label] == counts[best] && dist_sum[label] < dist_sum[best]);
        if better {
            best = label;
        }
    }
    Ok(best)
}

/// One oracle-equivalence failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure {
    pub k: usize,
    pub num_labels: usize,
    pub correct_label: usize,
    pub q: Vec<f64>,
    pub analytic: f64,
    pub enumerated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub instances: usize,
    /// Largest `|analytic − enumerated|` over all instances.
    pub max_deviation: f64,
    /// Largest `|Σ_i Q_i + tie mass − 1|` over all instances.
    pub max_completeness_error: f64,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random probability vector of length `l`; roughly one entry in eight is
/// forced to zero so the zero-mass paths get exercised.
pub fn random_distribution<R: Rng>(rng: &mut R, l: usize) -> LabelDistribution {
    loop {
        let raw: Vec<f64> = (0..l)
            .map(|_| {
                if l > 1 && rng.gen_ratio(1, 8) {
                    0.0
                } else {
                    -(1.0 - rng.gen::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
            if let Ok(d) = LabelDistribution::new(probs) {
                return d;
            }
        }
    }
}

/// Compares `analytic` with exhaustive enumeration for every `K ≤ max_k`,
/// `L ≤ max_l` on `trials` random `q` vectors each.
pub fn validate_against_oracle<F>(
    max_k: usize,
    max_l: usize,
    trials: usize,
    seed: u64,
    tolerance: f64,
    analytic: F,
) -> Result<ValidationReport>
where
    F: Fn(&NeighborhoodSpec, &LabelDistribution) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport {
        instances: 0,
        max_deviation: 0.0,
        max_completeness_error: 0.0,
        failures: Vec::new(),
    };
    for l in 1..=max_l {
        for k in 1..=max_k {
            for trial in 0..trials {
                let q = random_distribution(&mut rng, l);
                let spec = NeighborhoodSpec::new(k, l, trial % l)?;
                let exact = enumerate_accuracy(&spec, &q)?;
                let mut total = exact.tie_mass;
                for label in 0..l {
                    let value = analytic(&spec.with_correct_label(label)?, &q)?;
                    let reference = exact.per_label_mass[label];
                    let dev = (value - reference).abs();
                    report.max_deviation = report.max_deviation.max(dev);
                    if dev > tolerance || dev.is_nan() {
                        report.failures.push(ValidationFailure {
                            k,
                            num_labels: l,
                            correct_label: label,
                            q: q.probs().to_vec(),
                            analytic: value,
                            enumerated: reference,
                        });
                    }
                    total += value;
                }
                report.max_completeness_error =
                    report.max_completeness_error.max((total - 1.0).abs());
                report.instances += 1;
            }
        }
    }
    Ok(report)
}
