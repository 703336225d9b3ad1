//! K-means with k-means++ seeding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans<S> {
    pub centroids: Vec<Vec<S>>,
    /// Cluster of each training row.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// Index of the nearest centroid; ties go to the lower index.
pub fn nearest<S: Scalar>(centroids: &[Vec<S>], x: &[S]) -> usize {
    let mut best = (0, S::infinity());
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

impl<S: Scalar> KMeans<S> {
    /// Clusters `rows` into `min(k, rows.len())` groups. A cluster that loses
    /// all its members keeps its previous centroid.
    pub fn fit<R: Rng>(rows: &[Vec<S>], k: usize, rng: &mut R) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("k-means rows"));
        }
        if k == 0 {
            return Err(Error::InvalidK { k, n: rows.len() });
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim || r.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("k-means rows must be finite and of equal length".into()));
        }
        let k = k.min(rows.len());

        let mut centroids = vec![rows[rng.random_range(0..rows.len())].clone()];
        let mut d2: Vec<S> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
        while centroids.len() < k {
            let total = d2.iter().fold(0.0, |acc, d| acc + d.as_f64());
            let next = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = rows.len() - 1;
                for (i, d) in d2.iter().enumerate() {
                    target -= d.as_f64();
                    if target < 0.0 && d.as_f64() > 0.0 {
                        pick = i;
                        break;
                    }
                }
                pick
            } else {
                // Every row coincides with a centroid.
                rng.random_range(0..rows.len())
            };
            centroids.push(rows[next].clone());
            for (d, r) in d2.iter_mut().zip(rows) {
                *d = d.min(sq_dist(r, &centroids[centroids.len() - 1]));
            }
        }

        let mut assignments: Vec<usize> = rows.iter().map(|r| nearest(&centroids, r)).collect();
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let mut sums = vec![vec![S::zero(); dim]; k];
            let mut counts = vec![0usize; k];
            for (r, &c) in rows.iter().zip(&assignments) {
                counts[c] += 1;
                for (s, &x) in sums[c].iter_mut().zip(r) {
                    *s = *s + x;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    let n = S::from_usize(counts[c]).expect("count fits scalar");
                    centroids[c] = sums[c].iter().map(|&s| s / n).collect();
                }
            }
            let next: Vec<usize> = rows.iter().map(|r| nearest(&centroids, r)).collect();
            if next == assignments {
                break;
            }
            assignments = next;
        }
        Ok(Self {
            centroids,
            assignments,
            iterations,
        })
    }

    pub fn predict(&self, x: &[S]) -> usize {
        nearest(&self.centroids, x)
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}
