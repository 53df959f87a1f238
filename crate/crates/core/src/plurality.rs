//! Analytic plurality accuracy of a K-NN vote under randomly-spread label
//! noise.
//!
//! The K neighbors of a test sample are modelled as i.i.d. draws from the
//! noisy neighborhood distribution `q`. The plurality accuracy `Q` is the
//! probability that the correct label appears strictly more often than
//! every other label:
//!
//! ```text
//! Q = Σ_{n_1..n_L : Σ n = K, n_c > n_j ∀ j≠c}  K! / (n_1!·…·n_L!) · Π q_j^{n_j}
//! ```
//!
//! The multinomial is split into a product of binomials
//! `C(K, n_1)·C(K−n_1, n_2)·…` and the sum is restricted to the admissible
//! tuples through per-label bounds (see [`summation_bounds`]). With the
//! correct label first and its count `n_1` fixed, every other label is capped
//! by `M* = n_1 − 1`, so the inner sums only depend on `(i, R, M*)`: the label
//! position, the slots still unassigned and the cap. Those suffix sums are
//! tabulated once per cap and reused by every prefix that reaches them.

use rayon::prelude::*;

use crate::distribution::{CorruptionMatrix, LabelDistribution};
use crate::error::{Error, Result};
use crate::numeric::{ln_pow, CompensatedSum, LnFactorial};

/// Neighborhood size, label count and the index of the correct label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    k: usize,
    num_labels: usize,
    correct_label: usize,
}

impl NeighborhoodSpec {
    pub fn new(k: usize, num_labels: usize, correct_label: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidNeighborhood("K must be at least 1".into()));
        }
        if num_labels == 0 {
            return Err(Error::InvalidNeighborhood("L must be at least 1".into()));
        }
        if correct_label >= num_labels {
            return Err(Error::InvalidNeighborhood(format!(
                "correct label {correct_label} is outside [0, {num_labels})"
            )));
        }
        Ok(Self {
            k,
            num_labels,
            correct_label,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn correct_label(&self) -> usize {
        self.correct_label
    }

    pub fn with_correct_label(&self, correct_label: usize) -> Result<Self> {
        Self::new(self.k, self.num_labels, correct_label)
    }

    /// Lower bound on the correct label's count: `⌈(K + L − 1) / L⌉`.
    pub fn min_correct_count(&self) -> usize {
        (self.k + self.num_labels - 1).div_ceil(self.num_labels)
    }
}

/// Summation range for one position of the nested sum.
///
/// Position `i` is 1-based in the reordered label list where the correct
/// label sits at position 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummationBounds {
    /// Smallest admissible count `m_i`.
    pub lower: usize,
    /// Largest admissible count `M_i`.
    pub upper: usize,
    /// Cap `M* = n_1 − 1` on every non-correct label; `None` at position 1.
    pub cap: Option<usize>,
    /// Slots still unassigned before position `i` (`R_i`).
    pub remaining: usize,
}

impl SummationBounds {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.lower..=self.upper
    }
}

/// Bounds `(m_i, M_i)` for position `prefix.len() + 1` given the counts
/// already chosen for positions `1..=prefix.len()`.
///
/// Position 1 is the correct label. `prefix` must respect the bounds returned
/// for earlier positions and must be shorter than `L`.
pub fn summation_bounds(spec: &NeighborhoodSpec, prefix: &[usize]) -> SummationBounds {
    let k = spec.k;
    let l = spec.num_labels;
    assert!(prefix.len() < l, "prefix already covers every label");
    if prefix.is_empty() {
        return SummationBounds {
            lower: spec.min_correct_count(),
            upper: k,
            cap: None,
            remaining: k,
        };
    }
    let i = prefix.len() + 1;
    let cap = prefix[0] - 1;
    let assigned: usize = prefix.iter().sum();
    let remaining = k - assigned;
    bounds_at(i, l, remaining, cap)
}

#[inline]
fn bounds_at(i: usize, l: usize, remaining: usize, cap: usize) -> SummationBounds {
    let later = (l - i) * cap;
    SummationBounds {
        lower: remaining.saturating_sub(later),
        upper: remaining.min(cap),
        cap: Some(cap),
        remaining,
    }
}

/// Noisy neighborhood distribution
/// `q_j = (1−γ)·C(ℓ_j) + γ·Σ_k P(ℓ_j|ℓ_k)·C(ℓ_k)`.
pub fn noisy_distribution(
    clean: &LabelDistribution,
    gamma: f64,
    matrix: &CorruptionMatrix,
) -> Result<LabelDistribution> {
    check_gamma(gamma)?;
    let l = clean.len();
    if matrix.size() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            actual: matrix.size(),
        });
    }
    let c = clean.probs();
    let q = (0..l)
        .map(|j| {
            let corrupted: f64 = (0..l).map(|k| matrix.get(k, j) * c[k]).sum();
            (1.0 - gamma) * c[j] + gamma * corrupted
        })
        .collect();
    LabelDistribution::new(q)
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

/// `q` reordered so the correct label is first; other labels keep their
/// relative order.
fn correct_first(spec: &NeighborhoodSpec, q: &LabelDistribution) -> Result<Vec<f64>> {
    if q.len() != spec.num_labels {
        return Err(Error::DimensionMismatch {
            expected: spec.num_labels,
            actual: q.len(),
        });
    }
    let c = spec.correct_label;
    let p = q.probs();
    let mut out = Vec::with_capacity(p.len());
    out.push(p[c]);
    out.extend(p.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v));
    Ok(out)
}

fn ln_probs(q: &[f64]) -> Vec<f64> {
    q.iter().map(|&p| p.ln()).collect()
}

/// Plurality accuracy `Q`: the probability that the correct label is the
/// strict plurality among `K` i.i.d. draws from `q`. Ties count as incorrect.
///
/// Outer terms (one per count of the correct label) are evaluated on the
/// current rayon pool and summed in index order, so the result does not
/// depend on the thread count.
pub fn plurality_accuracy(spec: &NeighborhoodSpec, q: &LabelDistribution) -> Result<f64> {
    let ordered = correct_first(spec, q)?;
    if spec.num_labels == 1 {
        return Ok(1.0);
    }
    let k = spec.k;
    let ln_q = ln_probs(&ordered);
    let lf = LnFactorial::new(k);
    let first = summation_bounds(spec, &[]);
    let terms: Vec<f64> = first
        .range()
        .into_par_iter()
        .map(|n1| {
            if ordered[0] == 0.0 {
                return 0.0;
            }
            let rest = SuffixTable::build(&ordered, &ln_q, &lf, k - n1, n1 - 1);
            let inner = rest.value(2, k - n1);
            if inner == 0.0 {
                0.0
            } else {
                (lf.ln_binomial(k, n1) + ln_pow(ln_q[0], n1)).exp() * inner
            }
        })
        .collect();
    Ok(clamp_probability(
        terms.iter().copied().collect::<CompensatedSum>().value(),
    ))
}

fn clamp_probability(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Tabulated suffix sums `S(i, R)` for one cap `M*`:
///
/// ```text
/// S(i, R) = Σ_{n=m_i}^{M_i} C(R, n) · q_i^n · S(i+1, R−n),   S(L+1, 0) = 1
/// ```
struct SuffixTable {
    max_remaining: usize,
    // values[(i - 2) * (max_remaining + 1) + r]
    values: Vec<f64>,
}

impl SuffixTable {
    fn build(q: &[f64], ln_q: &[f64], lf: &LnFactorial, max_remaining: usize, cap: usize) -> Self {
        let l = q.len();
        let width = max_remaining + 1;
        let mut values = vec![0.0; (l - 1) * width];
        // position L + 1 only accepts R = 0
        let mut next: Vec<f64> = (0..width).map(|r| if r == 0 { 1.0 } else { 0.0 }).collect();
        for i in (2..=l).rev() {
            let row = (i - 2) * width;
            let qi = q[i - 1];
            let ln_qi = ln_q[i - 1];
            for r in 0..width {
                let b = bounds_at(i, l, r, cap);
                if b.is_empty() {
                    continue;
                }
                let upper = if qi == 0.0 { 0 } else { b.upper };
                let mut acc = CompensatedSum::new();
                for n in b.lower..=upper {
                    let tail = next[r - n];
                    if tail == 0.0 {
                        continue;
                    }
                    acc.add((lf.ln_binomial(r, n) + ln_pow(ln_qi, n)).exp() * tail);
                }
                values[row + r] = acc.value();
            }
            next.copy_from_slice(&values[row..row + width]);
        }
        Self {
            max_remaining,
            values,
        }
    }

    #[inline]
    fn value(&self, i: usize, r: usize) -> f64 {
        self.values[(i - 2) * (self.max_remaining + 1) + r]
    }
}

/// Visits every tuple reached by the bounded nested loop, in the original
/// label order (`counts[j]` is the count of label `j`).
pub fn for_each_admissible_tuple<F: FnMut(&[usize])>(spec: &NeighborhoodSpec, mut visit: F) {
    let l = spec.num_labels;
    let c = spec.correct_label;
    // position p (0-based, correct label first) -> original label index
    let order: Vec<usize> = std::iter::once(c).chain((0..l).filter(|&j| j != c)).collect();
    let mut prefix = Vec::with_capacity(l);
    let mut counts = vec![0; l];
    walk(spec, &order, &mut prefix, &mut counts, &mut visit);
}

fn walk<F: FnMut(&[usize])>(
    spec: &NeighborhoodSpec,
    order: &[usize],
    prefix: &mut Vec<usize>,
    counts: &mut [usize],
    visit: &mut F,
) {
    if prefix.len() == spec.num_labels {
        visit(counts);
        return;
    }
    let bounds = summation_bounds(spec, prefix);
    for n in bounds.range() {
        counts[order[prefix.len()]] = n;
        prefix.push(n);
        walk(spec, order, prefix, counts, visit);
        prefix.pop();
    }
    counts[order[prefix.len()]] = 0;
}

/// Plurality accuracy by the bounded nested loop without memoization.
///
/// Exponential in `L`; a reference for the tabulated path on small inputs.
pub fn plurality_accuracy_naive(spec: &NeighborhoodSpec, q: &LabelDistribution) -> Result<f64> {
    let ordered = correct_first(spec, q)?;
    if spec.num_labels == 1 {
        return Ok(1.0);
    }
    let ln_q = ln_probs(&ordered);
    let lf = LnFactorial::new(spec.k);
    let mut acc = CompensatedSum::new();
    let mut prefix = Vec::with_capacity(spec.num_labels);
    naive_walk(spec, &ordered, &ln_q, &lf, &mut prefix, 0.0, &mut acc);
    Ok(clamp_probability(acc.value()))
}

fn naive_walk(
    spec: &NeighborhoodSpec,
    q: &[f64],
    ln_q: &[f64],
    lf: &LnFactorial,
    prefix: &mut Vec<usize>,
    ln_term: f64,
    acc: &mut CompensatedSum,
) {
    let pos = prefix.len();
    if pos == spec.num_labels {
        acc.add(ln_term.exp());
        return;
    }
    let bounds = summation_bounds(spec, prefix);
    for n in bounds.range() {
        if n > 0 && q[pos] == 0.0 {
            break;
        }
        let next = ln_term + lf.ln_binomial(bounds.remaining, n) + ln_pow(ln_q[pos], n);
        prefix.push(n);
        naive_walk(spec, q, ln_q, lf, prefix, next, acc);
        prefix.pop();
    }
}

/// Binomial tail for flip noise with a point-mass clean neighborhood:
/// `Σ_{n=⌈(K+1)/2⌉}^{K} C(K, n)·(1−γ)^n·γ^{K−n}`, where `n` counts the
/// uncorrupted neighbors.
pub fn flip_accuracy_simplified(k: usize, gamma: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidNeighborhood("K must be at least 1".into()));
    }
    check_gamma(gamma)?;
    let lf = LnFactorial::new(k);
    let ln_keep = (1.0 - gamma).ln();
    let ln_flip = gamma.ln();
    let acc: CompensatedSum = ((k + 2) / 2..=k)
        .map(|n| (lf.ln_binomial(k, n) + ln_pow(ln_keep, n) + ln_pow(ln_flip, k - n)).exp())
        .collect();
    Ok(clamp_probability(acc.value()))
}

/// Noisy distribution for uniform noise on a point-mass clean neighborhood,
/// with the correct label at index 0.
pub fn uniform_q_simplified(num_labels: usize, gamma: f64) -> Result<LabelDistribution> {
    if num_labels == 0 {
        return Err(Error::InvalidNeighborhood("L must be at least 1".into()));
    }
    check_gamma(gamma)?;
    let off = gamma / num_labels as f64;
    let mut probs = vec![off; num_labels];
    probs[0] = (1.0 - gamma) + off;
    LabelDistribution::new(probs)
}

/// Predicted accuracy under locally-concentrated noise: `1 − γ`.
pub fn concentrated_accuracy(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(1.0 - gamma)
}
