//! Corruption matrices and label-noise injection.
//!
//! Randomly-spread noise picks `⌊γ·N⌋` training samples uniformly without
//! replacement and redraws each label from the corruption matrix row of its
//! clean label; the redraw may return the original label, so the realized
//! fraction of changed labels can fall below `γ`. Locally-concentrated noise
//! clusters each class with k-means and relabels one whole cluster per class.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_labels, FeatureDataset};
use crate::distribution::CorruptionMatrix;
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::plurality::check_gamma;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum NoiseRegime {
    /// Every entry of the corruption matrix is `1/L`.
    Uniform,
    /// Label `k` is always corrupted to `flip_map[k]`.
    Flip {
        flip_map: Vec<usize>,
        #[serde(default)]
        allow_fixed_points: bool,
    },
    /// Arbitrary row-stochastic corruption matrix.
    Matrix { matrix: CorruptionMatrix },
    /// One k-means cluster per class is relabeled to
    /// `alternative_label_map[class]`.
    Concentrated {
        clusters_per_class: usize,
        alternative_label_map: Vec<usize>,
    },
}

impl NoiseRegime {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseRegime::Uniform => "uniform",
            NoiseRegime::Flip { .. } => "flip",
            NoiseRegime::Matrix { .. } => "matrix",
            NoiseRegime::Concentrated { .. } => "concentrated",
        }
    }

    /// Flip regime with the cyclic shift `k → (k + 1) mod L`.
    pub fn cyclic_flip(num_labels: usize) -> Self {
        NoiseRegime::Flip {
            flip_map: cyclic_shift(num_labels),
            allow_fixed_points: false,
        }
    }
}

/// `k → (k + 1) mod L`.
pub fn cyclic_shift(num_labels: usize) -> Vec<usize> {
    (0..num_labels).map(|k| (k + 1) % num_labels).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub regime: NoiseRegime,
    pub num_labels: usize,
    /// Nominal fraction of corrupted samples; unused by the concentrated
    /// regime.
    pub gamma: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn new(regime: NoiseRegime, num_labels: usize, gamma: f64, rng_seed: u64) -> Result<Self> {
        let spec = Self {
            regime,
            num_labels,
            gamma,
            rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.num_labels;
        if l == 0 {
            return Err(Error::InvalidNoiseSpec("no labels".into()));
        }
        check_gamma(self.gamma)?;
        match &self.regime {
            NoiseRegime::Uniform => {}
            NoiseRegime::Flip {
                flip_map,
                allow_fixed_points,
            } => {
                if flip_map.len() != l {
                    return Err(Error::InvalidNoiseSpec(format!(
                        "flip map has {} entries for {l} labels",
                        flip_map.len()
                    )));
                }
                CorruptionMatrix::permutation(flip_map)?;
                if !allow_fixed_points {
                    if let Some(k) = (0..l).find(|&k| flip_map[k] == k) {
                        return Err(Error::InvalidNoiseSpec(format!(
                            "flip map sends label {k} to itself"
                        )));
                    }
                }
            }
            NoiseRegime::Matrix { matrix } => {
                if matrix.size() != l {
                    return Err(Error::DimensionMismatch {
                        expected: l,
                        actual: matrix.size(),
                    });
                }
            }
            NoiseRegime::Concentrated {
                clusters_per_class,
                alternative_label_map,
            } => {
                if *clusters_per_class < 2 {
                    return Err(Error::InvalidNoiseSpec(
                        "concentrated noise needs at least 2 clusters per class".into(),
                    ));
                }
                if alternative_label_map.len() != l {
                    return Err(Error::InvalidNoiseSpec(format!(
                        "alternative label map has {} entries for {l} labels",
                        alternative_label_map.len()
                    )));
                }
                for (class, &target) in alternative_label_map.iter().enumerate() {
                    if target >= l {
                        return Err(Error::InvalidNoiseSpec(format!(
                            "alternative label {target} for class {class} is outside [0, {l})"
                        )));
                    }
                    if target == class {
                        return Err(Error::InvalidNoiseSpec(format!(
                            "class {class} is mapped to itself"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Same spec at a different noise level and seed.
    pub fn at(&self, gamma: f64, rng_seed: u64) -> Result<Self> {
        Self::new(self.regime.clone(), self.num_labels, gamma, rng_seed)
    }

    /// Corruption matrix for the randomly-spread regimes.
    pub fn matrix(&self) -> Result<CorruptionMatrix> {
        build_matrix(&self.regime, self.num_labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    /// Sorted indices of samples selected for corruption.
    pub corrupted_indices: Vec<usize>,
    /// Fraction of labels that actually changed.
    pub realized_noise_fraction: f64,
    pub nominal_gamma: f64,
}

pub fn build_matrix(regime: &NoiseRegime, num_labels: usize) -> Result<CorruptionMatrix> {
    match regime {
        NoiseRegime::Uniform => CorruptionMatrix::uniform(num_labels),
        NoiseRegime::Flip { flip_map, .. } => {
            if flip_map.len() != num_labels {
                return Err(Error::DimensionMismatch {
                    expected: num_labels,
                    actual: flip_map.len(),
                });
            }
            CorruptionMatrix::permutation(flip_map)
        }
        NoiseRegime::Matrix { matrix } => {
            if matrix.size() != num_labels {
                return Err(Error::DimensionMismatch {
                    expected: num_labels,
                    actual: matrix.size(),
                });
            }
            CorruptionMatrix::from_rows(matrix.rows().map(<[f64]>::to_vec).collect())
        }
        NoiseRegime::Concentrated { .. } => Err(Error::InvalidNoiseSpec(
            "locally-concentrated noise has no corruption matrix".into(),
        )),
    }
}

fn changed_fraction(clean: &[usize], noisy: &[usize]) -> f64 {
    if clean.is_empty() {
        return 0.0;
    }
    let changed = clean.iter().zip(noisy).filter(|(a, b)| a != b).count();
    changed as f64 / clean.len() as f64
}

fn draw_from_row<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.iter().rposition(|&p| p > 0.0).expect("row has positive mass")
}

/// Randomly-spread noise; deterministic given `spec.rng_seed`.
pub fn inject_random_noise(labels: &[usize], spec: &NoiseSpec) -> Result<(Vec<usize>, InjectionReport)> {
    spec.validate()?;
    let matrix = spec.matrix()?;
    check_labels(labels, spec.num_labels)?;
    let n = labels.len();
    let count = (spec.gamma * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut selected = index::sample(&mut rng, n, count).into_vec();
    selected.sort_unstable();
    let mut noisy = labels.to_vec();
    for &i in &selected {
        noisy[i] = draw_from_row(&mut rng, matrix.row(labels[i]));
    }
    let report = InjectionReport {
        realized_noise_fraction: changed_fraction(labels, &noisy),
        corrupted_indices: selected,
        nominal_gamma: spec.gamma,
    };
    Ok((noisy, report))
}

/// Locally-concentrated noise: per class, k-means into
/// `clusters_per_class` groups, then one uniformly drawn cluster is relabeled
/// to the class's alternative label.
pub fn inject_concentrated_noise(
    data: &FeatureDataset,
    spec: &NoiseSpec,
) -> Result<(Vec<usize>, InjectionReport)> {
    spec.validate()?;
    let NoiseRegime::Concentrated {
        clusters_per_class,
        alternative_label_map,
    } = &spec.regime
    else {
        return Err(Error::InvalidNoiseSpec(format!(
            "{} regime is not locally concentrated",
            spec.regime.name()
        )));
    };
    if data.num_labels() != spec.num_labels {
        return Err(Error::DimensionMismatch {
            expected: spec.num_labels,
            actual: data.num_labels(),
        });
    }
    let k = *clusters_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut noisy = data.labels().to_vec();
    let mut corrupted = Vec::new();
    for class in 0..spec.num_labels {
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                size: members.len(),
                clusters: k,
            });
        }
        let subset = data.subset(&members);
        let clustering = kmeans(subset.features(), data.dim(), k, rng.gen())?;
        let chosen = rng.gen_range(0..k);
        for (local, &i) in members.iter().enumerate() {
            if clustering.assignments[local] == chosen {
                noisy[i] = alternative_label_map[class];
                corrupted.push(i);
            }
        }
    }
    corrupted.sort_unstable();
    let realized = changed_fraction(data.labels(), &noisy);
    Ok((
        noisy,
        InjectionReport {
            corrupted_indices: corrupted,
            realized_noise_fraction: realized,
            nominal_gamma: realized,
        },
    ))
}
