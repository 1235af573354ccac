//! Embedding clustering: k-means (k-means++ seeding, Lloyd iterations) and
//! connected components of an inner-product threshold graph.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::util::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative inertia change falls below this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_plus_plus(points: &Array2<f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let (n, d) = points.dim();
    let mut centroids = Array2::<f64>::zeros((k, d));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(points: &Array2<f64>, centroids: &Array2<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..centroids.nrows() {
            let d = sq_dist(points.row(i), centroids.row(c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
        inertia += best_d;
    }
    inertia
}

fn lloyd(points: &Array2<f64>, k: usize, opts: &KMeansOptions, seed: u64) -> KMeansResult {
    let mut rng = rng_from_seed(seed);
    let (n, d) = points.dim();
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut labels = vec![0; n];
    let mut inertia = assign(points, &centroids, &mut labels);
    for _ in 0..opts.max_iters {
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &points.row(i));
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = &sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).assign(&mean);
            }
        }
        let next = assign(points, &centroids, &mut labels);
        let change = (inertia - next).abs();
        inertia = next;
        if change <= opts.tol * inertia.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// Best-inertia k-means over `opts.restarts` seeded runs; `k` is capped at
/// the number of points.
pub fn kmeans(points: &Array2<f64>, k: usize, opts: &KMeansOptions, seed: u64) -> KMeansResult {
    let n = points.nrows();
    if n == 0 {
        return KMeansResult {
            labels: Vec::new(),
            centroids: Array2::zeros((0, points.ncols())),
            inertia: 0.0,
        };
    }
    let k = k.clamp(1, n);
    let mut best: Option<KMeansResult> = None;
    for r in 0..opts.restarts.max(1) {
        let run = lloyd(points, k, opts, derive_seed(seed, &[r as u64]));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the graph joining points whose inner product is
/// at least `tau`. Components are numbered by their smallest member.
pub fn inner_product_threshold_cluster(points: &Array2<f64>, tau: f64) -> Vec<usize> {
    let n = points.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if points.row(i).dot(&points.row(j)) >= tau {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut ids = std::collections::HashMap::new();
    (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect()
}
