//! Accuracy-versus-noise curves: analytic, empirical and locally
//! concentrated.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureDataset;
use crate::distribution::{CorruptionMatrix, LabelDistribution};
use crate::error::{Error, Result};
use crate::knn::{accuracy_from_neighbors, clean_distribution, neighbors_batch};
use crate::noise::{inject_concentrated_noise, inject_random_noise, NoiseRegime, NoiseSpec};
use crate::numeric::CompensatedSum;
use crate::plurality::{check_gamma, noisy_distribution, plurality_accuracy, NeighborhoodSpec};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Analytic,
    Empirical,
    Concentrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub accuracy: f64,
    /// Sample standard deviation over repeats, for empirical curves.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub kind: CurveKind,
    pub k: usize,
    /// Short description of the noise model.
    pub noise: String,
    points: Vec<CurvePoint>,
}

impl AccuracyCurve {
    pub fn new(kind: CurveKind, k: usize, noise: impl Into<String>, points: Vec<CurvePoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.gamma) {
                return Err(Error::InvalidCurve(format!("gamma {} outside [0, 1]", p.gamma)));
            }
            if !(0.0..=1.0).contains(&p.accuracy) {
                return Err(Error::InvalidCurve(format!(
                    "accuracy {} outside [0, 1]",
                    p.accuracy
                )));
            }
            if i > 0 && points[i - 1].gamma >= p.gamma {
                return Err(Error::InvalidCurve(format!(
                    "gammas not strictly increasing at {}",
                    p.gamma
                )));
            }
        }
        Ok(Self {
            kind,
            k,
            noise: noise.into(),
            points,
        })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.accuracy).collect()
    }
}

/// A test sample's clean neighborhood distribution and its true label.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanSample {
    pub clean: LabelDistribution,
    pub correct_label: usize,
}

/// Clean samples from the `k`-neighborhoods of every test row in the clean
/// training set.
pub fn clean_samples_from_knn(
    train_clean: &FeatureDataset,
    test: &FeatureDataset,
    k: usize,
) -> Result<Vec<CleanSample>> {
    (0..test.len())
        .into_par_iter()
        .map(|s| {
            Ok(CleanSample {
                clean: clean_distribution(train_clean, test.row(s), k)?,
                correct_label: test.label(s),
            })
        })
        .collect()
}

/// Pairs externally supplied distributions (e.g. softmax outputs) with
/// labels.
pub fn clean_samples_from_distributions(
    dists: Vec<LabelDistribution>,
    labels: &[usize],
) -> Result<Vec<CleanSample>> {
    if dists.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: dists.len(),
        });
    }
    Ok(dists
        .into_iter()
        .zip(labels)
        .map(|(clean, &correct_label)| CleanSample {
            clean,
            correct_label,
        })
        .collect())
}

fn check_grid(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::Empty("gamma grid"));
    }
    for g in gammas {
        check_gamma(*g)?;
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCurve("gamma grid is not strictly increasing".into()));
    }
    Ok(())
}

fn sample_key(s: &CleanSample) -> (usize, Vec<u64>) {
    (
        s.correct_label,
        s.clean.probs().iter().map(|p| p.to_bits()).collect(),
    )
}

/// Mean plurality accuracy over `samples` at every noise level.
///
/// Identical samples are evaluated once per noise level; the mean is taken in
/// sample order.
pub fn analytic_curve(
    samples: &[CleanSample],
    k: usize,
    matrix: &CorruptionMatrix,
    gammas: &[f64],
) -> Result<AccuracyCurve> {
    if samples.is_empty() {
        return Err(Error::Empty("test sample list"));
    }
    check_grid(gammas)?;
    let mut unique: Vec<&CleanSample> = Vec::new();
    let mut slot_of = Vec::with_capacity(samples.len());
    let mut seen: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
    for s in samples {
        let slot = *seen.entry(sample_key(s)).or_insert_with(|| {
            unique.push(s);
            unique.len() - 1
        });
        slot_of.push(slot);
    }
    let specs: Vec<NeighborhoodSpec> = unique
        .iter()
        .map(|s| NeighborhoodSpec::new(k, s.clean.len(), s.correct_label))
        .collect::<Result<_>>()?;

    let points = gammas
        .iter()
        .map(|&gamma| {
            let values: Vec<f64> = unique
                .par_iter()
                .zip(specs.par_iter())
                .map(|(s, spec)| plurality_accuracy(spec, &noisy_distribution(&s.clean, gamma, matrix)?))
                .collect::<Result<_>>()?;
            let sum: CompensatedSum = slot_of.iter().map(|&i| values[i]).collect();
            Ok(CurvePoint {
                gamma,
                accuracy: (sum.value() / samples.len() as f64).clamp(0.0, 1.0),
                std: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AccuracyCurve::new(CurveKind::Analytic, k, describe_matrix(matrix), points)
}

/// Curve for a perfectly learnable dataset: every neighborhood is a point
/// mass on its correct label, so one `Q` per noise level (computed for label
/// 0) is the accuracy.
pub fn learnable_curve(
    num_labels: usize,
    k: usize,
    matrix: &CorruptionMatrix,
    gammas: &[f64],
) -> Result<AccuracyCurve> {
    let sample = CleanSample {
        clean: LabelDistribution::point_mass(num_labels, 0)?,
        correct_label: 0,
    };
    analytic_curve(std::slice::from_ref(&sample), k, matrix, gammas)
}

fn describe_matrix(matrix: &CorruptionMatrix) -> String {
    format!("matrix L={}", matrix.size())
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|v| (v - mean).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / (n - 1.0);
    (mean, var.sqrt())
}

/// Empirical K-NN accuracy on the clean `test` set after injecting
/// randomly-spread noise into `train`, `repeats` times per noise level.
///
/// Repeat `r` at grid index `g` uses `derive_seed(base_seed, r, g)`.
pub fn empirical_curve(
    train: &FeatureDataset,
    test: &FeatureDataset,
    k: usize,
    noise: &NoiseSpec,
    gammas: &[f64],
    repeats: usize,
    base_seed: u64,
) -> Result<AccuracyCurve> {
    if repeats == 0 {
        return Err(Error::InvalidCurve("repeats must be at least 1".into()));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if matches!(noise.regime, NoiseRegime::Concentrated { .. }) {
        return Err(Error::InvalidNoiseSpec(
            "use concentrated_curve for locally-concentrated noise".into(),
        ));
    }
    check_grid(gammas)?;
    let nbrs = neighbors_batch(train, test, k)?;
    let runs: Vec<(usize, usize)> = (0..gammas.len())
        .flat_map(|g| (0..repeats).map(move |r| (g, r)))
        .collect();
    let accs: Vec<f64> = runs
        .par_iter()
        .map(|&(g, r)| {
            let spec = noise.at(gammas[g], derive_seed(base_seed, r as u64, g as u64))?;
            let (noisy, _) = inject_random_noise(train.labels(), &spec)?;
            Ok(accuracy_from_neighbors(
                &nbrs,
                &noisy,
                train.num_labels(),
                test.labels(),
            ))
        })
        .collect::<Result<_>>()?;
    let points = gammas
        .iter()
        .enumerate()
        .map(|(g, &gamma)| {
            let (mean, std) = mean_and_std(&accs[g * repeats..(g + 1) * repeats]);
            CurvePoint {
                gamma,
                accuracy: mean,
                std: Some(std),
            }
        })
        .collect();
    AccuracyCurve::new(CurveKind::Empirical, k, noise.regime.name(), points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentratedRun {
    pub clusters_per_class: usize,
    pub realized_gamma: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentratedCurve {
    /// One entry per clusters value, in grid order.
    pub runs: Vec<ConcentratedRun>,
    /// Empirical accuracy against realized noise level, sorted by noise
    /// level; runs with equal realized levels are averaged.
    pub empirical: AccuracyCurve,
    /// The `1 − γ` reference at the same noise levels.
    pub predicted: AccuracyCurve,
}

/// Empirical accuracy under locally-concentrated noise for each
/// clusters-per-class value, against the `1 − γ` prediction at the realized
/// noise level.
pub fn concentrated_curve(
    train: &FeatureDataset,
    test: &FeatureDataset,
    k: usize,
    clusters_grid: &[usize],
    alternative_label_map: &[usize],
    base_seed: u64,
) -> Result<ConcentratedCurve> {
    if clusters_grid.is_empty() {
        return Err(Error::Empty("clusters grid"));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let nbrs = neighbors_batch(train, test, k)?;
    let runs: Vec<ConcentratedRun> = clusters_grid
        .iter()
        .enumerate()
        .map(|(g, &clusters)| {
            let spec = NoiseSpec::new(
                NoiseRegime::Concentrated {
                    clusters_per_class: clusters,
                    alternative_label_map: alternative_label_map.to_vec(),
                },
                train.num_labels(),
                0.0,
                derive_seed(base_seed, 0, g as u64),
            )?;
            let (noisy, report) = inject_concentrated_noise(train, &spec)?;
            Ok(ConcentratedRun {
                clusters_per_class: clusters,
                realized_gamma: report.realized_noise_fraction,
                accuracy: accuracy_from_neighbors(&nbrs, &noisy, train.num_labels(), test.labels()),
            })
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<&ConcentratedRun> = runs.iter().collect();
    order.sort_by(|a, b| a.realized_gamma.total_cmp(&b.realized_gamma));
    let mut points: Vec<CurvePoint> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for (i, run) in order.iter().enumerate() {
        group.push(run.accuracy);
        let last = i + 1 == order.len() || order[i + 1].realized_gamma != run.realized_gamma;
        if last {
            points.push(CurvePoint {
                gamma: run.realized_gamma,
                accuracy: mean_and_std(&group).0,
                std: None,
            });
            group.clear();
        }
    }
    let predicted = points
        .iter()
        .map(|p| CurvePoint {
            gamma: p.gamma,
            accuracy: 1.0 - p.gamma,
            std: None,
        })
        .collect();
    Ok(ConcentratedCurve {
        runs,
        empirical: AccuracyCurve::new(CurveKind::Concentrated, k, "concentrated", points)?,
        predicted: AccuracyCurve::new(CurveKind::Analytic, k, "concentrated 1-gamma", predicted)?,
    })
}
