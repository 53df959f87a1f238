//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::squared_distance;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    /// `k × dim`, row-major.
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroid after each
    /// assignment step.
    pub objective_history: Vec<f64>,
}

impl KMeansResult {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

fn dist_to_centroid(point: &[f32], centroid: &[f64]) -> f64 {
    point
        .iter()
        .zip(centroid)
        .map(|(&x, &c)| {
            let d = f64::from(x) - c;
            d * d
        })
        .sum()
}

/// Clusters the rows of `points` (row-major, `dim` columns) into `k` groups.
pub fn kmeans(points: &[f32], dim: usize, k: usize, seed: u64) -> Result<KMeansResult> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::InvalidDataset(format!(
            "{} values do not form rows of dimension {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::InvalidNeighborhood(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_distance(row(i), row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final partial sum
            pick.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).expect("positive weight"))
        } else {
            is_chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen.push(pick);
        is_chosen[pick] = true;
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(row(i), row(pick)));
        }
    }
    let mut centroids: Vec<f64> = chosen
        .iter()
        .flat_map(|&c| row(c).iter().map(|&v| f64::from(v)))
        .collect();

    let mut assignments = vec![usize::MAX; n];
    let mut objective_history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = row(i);
                (0..k)
                    .map(|c| (c, dist_to_centroid(p, &centroids[c * dim..(c + 1) * dim])))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .expect("k >= 1")
            })
            .collect();
        let changed = assigned
            .iter()
            .zip(&assignments)
            .any(|(&(c, _), &old)| c != old);
        for (slot, &(c, _)) in assignments.iter_mut().zip(&assigned) {
            *slot = c;
        }
        let mut dists: Vec<f64> = assigned.iter().map(|&(_, d)| d).collect();
        objective_history.push(dists.iter().sum());
        if !changed {
            break;
        }

        // update step
        let mut sums = vec![0.0f64; k * dim];
        let mut sizes = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            sizes[c] += 1;
            for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += f64::from(v);
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] / sizes[c] as f64;
                }
                continue;
            }
            // empty cluster: take over the point farthest from its centroid
            let far = dists
                .iter()
                .enumerate()
                .filter(|&(i, _)| sizes[assignments[i]] > 1)
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i);
            if let Some(i) = far {
                let old = assignments[i];
                sizes[old] -= 1;
                for j in 0..dim {
                    let v = f64::from(row(i)[j]);
                    sums[old * dim + j] -= v;
                    centroids[old * dim + j] = sums[old * dim + j] / sizes[old] as f64;
                    centroids[c * dim + j] = v;
                }
                sizes[c] = 1;
                assignments[i] = c;
                dists[i] = 0.0;
            }
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        dim,
        iterations,
        objective_history,
    })
}
