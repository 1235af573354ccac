//! Synthetic multi-structure multi-view graphs. Every view belongs to one
//! structure; a structure partitions the nodes into contiguous blocks that
//! are γ-quasi-cliques in each of its views, and a fixed fraction of node
//! pairs is toggled per view as noise.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GroundTruth, MultiViewGraph, SparseSlice};
use crate::util::{derive_seed, rng_from_seed};

/// Intra-cluster densities explored by the quality benchmark.
pub const GAMMA_GRID: [f64; 8] = [0.15, 0.13, 0.11, 0.09, 0.07, 0.05, 0.03, 0.01];

pub const DEFAULT_FLIP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub views: usize,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub structures: Vec<StructureSpec>,
    pub gamma: f64,
    pub flip_fraction: f64,
    #[serde(default = "default_directed")]
    pub directed: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_directed() -> bool {
    true
}

/// 120 nodes, three structures of three views each with node clusters of
/// sizes (60, 40, 20), (100, 20) and (20, 100).
pub fn default_paper_spec(gamma: f64) -> GeneratorSpec {
    GeneratorSpec {
        structures: vec![
            StructureSpec { views: 3, cluster_sizes: vec![60, 40, 20] },
            StructureSpec { views: 3, cluster_sizes: vec![100, 20] },
            StructureSpec { views: 3, cluster_sizes: vec![20, 100] },
        ],
        gamma,
        flip_fraction: DEFAULT_FLIP_FRACTION,
        directed: true,
        seed: 0,
    }
}

/// Splits `total` proportionally to `weights` (largest remainder, ties to the
/// earlier entry). Every part is at least 1 when `total >= weights.len()`.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let wsum: usize = weights.iter().sum();
    let mut parts: Vec<usize> = weights.iter().map(|&w| total * w / wsum).collect();
    let mut rem: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| ((total * w) % wsum, i))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = total - parts.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(missing) {
        parts[i] += 1;
    }
    if total >= weights.len() {
        while let Some(z) = parts.iter().position(|&p| p == 0) {
            let big = (0..parts.len()).max_by_key(|&i| (parts[i], usize::MAX - i)).unwrap();
            parts[big] -= 1;
            parts[z] += 1;
        }
    }
    parts
}

/// The default layout rescaled to `nodes` nodes and `views` views, keeping
/// cluster-size and view-count proportions.
pub fn scaled_paper_spec(nodes: usize, views: usize, gamma: f64) -> Result<GeneratorSpec> {
    let base = default_paper_spec(gamma);
    if nodes < 3 || views < base.structures.len() {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 nodes and {} views, got {nodes} and {views}",
            base.structures.len()
        )));
    }
    let view_counts = apportion(views, &base.structures.iter().map(|s| s.views).collect::<Vec<_>>());
    let structures = base
        .structures
        .iter()
        .zip(view_counts)
        .map(|(s, v)| StructureSpec {
            views: v,
            cluster_sizes: apportion(nodes, &s.cluster_sizes),
        })
        .collect();
    Ok(GeneratorSpec { structures, ..base })
}

impl GeneratorSpec {
    pub fn num_nodes(&self) -> usize {
        self.structures.first().map(|s| s.cluster_sizes.iter().sum()).unwrap_or(0)
    }

    pub fn num_views(&self) -> usize {
        self.structures.iter().map(|s| s.views).sum()
    }

    /// Node clusters per structure.
    pub fn cluster_counts(&self) -> Vec<usize> {
        self.structures.iter().map(|s| s.cluster_sizes.len()).collect()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.structures.is_empty() {
            return Err(Error::InvalidArgument("no structures".into()));
        }
        let n = self.num_nodes();
        for (s, st) in self.structures.iter().enumerate() {
            let total: usize = st.cluster_sizes.iter().sum();
            if total != n {
                return Err(Error::InvalidArgument(format!(
                    "structure {s} covers {total} nodes, structure 0 covers {n}"
                )));
            }
            if st.cluster_sizes.contains(&0) {
                return Err(Error::InvalidArgument(format!("structure {s} has an empty cluster")));
            }
        }
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two nodes".into()));
        }
        for (name, v) in [("gamma", self.gamma), ("flip_fraction", self.flip_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Number of node pairs toggled in each view.
    pub fn flips_per_view(&self) -> usize {
        let n = self.num_nodes();
        let pairs = if self.directed { n * (n - 1) } else { n * (n - 1) / 2 };
        (self.flip_fraction * pairs as f64).round() as usize
    }
}

fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect()
}

fn generate_view(spec: &GeneratorSpec, labels: &[usize], seed: u64) -> SparseSlice {
    let n = labels.len();
    let mut rng = rng_from_seed(seed);
    let mut adj = vec![false; n * n];
    for i in 0..n {
        let start = if spec.directed { 0 } else { i + 1 };
        for j in start..n {
            if i != j && labels[i] == labels[j] && rng.random_bool(spec.gamma) {
                adj[i * n + j] = true;
            }
        }
    }
    let flips = spec.flips_per_view();
    if spec.directed {
        for p in index::sample(&mut rng, n * (n - 1), flips) {
            let i = p / (n - 1);
            let mut j = p % (n - 1);
            if j >= i {
                j += 1;
            }
            adj[i * n + j] = !adj[i * n + j];
        }
    } else {
        for p in index::sample(&mut rng, n * (n - 1) / 2, flips) {
            let (i, j) = upper_pair(p, n);
            adj[i * n + j] = !adj[i * n + j];
        }
    }
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if adj[i * n + j] {
                entries.push((i, j, 1.0));
                if !spec.directed {
                    entries.push((j, i, 1.0));
                }
            }
        }
    }
    if !spec.directed {
        entries.sort_by_key(|&(i, j, _)| (i, j));
    }
    SparseSlice::new(entries)
}

/// Maps a linear index to the pair `(i, j)`, `i < j`, in row-major order.
fn upper_pair(mut p: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while p >= n - 1 - i {
        p -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + p)
}

/// Samples a graph; views are emitted structure by structure.
pub fn generate(spec: &GeneratorSpec) -> Result<MultiViewGraph> {
    spec.validate()?;
    let n = spec.num_nodes();
    let mut slices = Vec::with_capacity(spec.num_views());
    let mut view_labels = Vec::with_capacity(spec.num_views());
    let mut node_labels = BTreeMap::new();
    for (s, st) in spec.structures.iter().enumerate() {
        let labels = block_labels(&st.cluster_sizes);
        for _ in 0..st.views {
            let k = slices.len() as u64;
            slices.push(generate_view(spec, &labels, derive_seed(spec.seed, &[k])));
            view_labels.push(s);
        }
        node_labels.insert(s, labels);
    }
    MultiViewGraph::new(n, slices, !spec.directed)?.with_truth(GroundTruth { view_labels, node_labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(gamma: f64, flip: f64) -> GeneratorSpec {
        GeneratorSpec {
            structures: vec![
                StructureSpec { views: 2, cluster_sizes: vec![4, 3] },
                StructureSpec { views: 1, cluster_sizes: vec![2, 5] },
            ],
            gamma,
            flip_fraction: flip,
            directed: true,
            seed: 3,
        }
    }

    #[test]
    fn density_one_gives_complete_blocks() {
        let g = generate(&small(1.0, 0.0)).unwrap();
        let truth = g.truth().unwrap();
        for k in 0..3 {
            let labels = &truth.node_labels[&truth.view_labels[k]];
            let d = g.slice(k).to_dense(7);
            for i in 0..7 {
                for j in 0..7 {
                    let want = if i != j && labels[i] == labels[j] { 1.0 } else { 0.0 };
                    assert_eq!(d[[i, j]], want);
                }
            }
        }
        assert_eq!(truth.view_labels, vec![0, 0, 1]);
    }

    #[test]
    fn density_zero_gives_empty_graph() {
        let g = generate(&small(0.0, 0.0)).unwrap();
        assert_eq!(g.nnz(), 0);
    }

    #[test]
    fn flips_toggle_exact_count() {
        let spec = small(0.0, 0.5);
        let g = generate(&spec).unwrap();
        assert_eq!(spec.flips_per_view(), 21);
        for k in 0..3 {
            assert_eq!(g.slice(k).nnz(), 21);
            assert!(g.slice(k).entries.iter().all(|&(i, j, _)| i != j));
        }
    }

    #[test]
    fn undirected_is_symmetric() {
        let spec = GeneratorSpec { directed: false, ..small(0.5, 0.2) };
        let g = generate(&spec).unwrap();
        assert!(g.is_symmetric());
    }

    #[test]
    fn upper_pairs_enumerate() {
        let n = 5;
        let got: Vec<_> = (0..10).map(|p| upper_pair(p, n)).collect();
        let want: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn rejects_inconsistent_sizes() {
        let mut spec = small(0.5, 0.0);
        spec.structures[1].cluster_sizes = vec![3, 3];
        assert!(generate(&spec).is_err());
        assert!(generate(&GeneratorSpec { gamma: 1.5, ..small(0.5, 0.0) }).is_err());
    }

    #[test]
    fn paper_layout() {
        let s = default_paper_spec(0.15);
        assert_eq!(s.num_nodes(), 120);
        assert_eq!(s.num_views(), 9);
        assert_eq!(s.structures.len(), 3);
        assert_eq!(GAMMA_GRID.len(), 8);
    }

    #[test]
    fn scaling_keeps_proportions() {
        let s = scaled_paper_spec(60, 18, 0.15).unwrap();
        assert_eq!(s.structures[0].cluster_sizes, vec![30, 20, 10]);
        assert_eq!(s.structures[1].cluster_sizes, vec![50, 10]);
        assert_eq!(s.num_views(), 18);
        let odd = scaled_paper_spec(31, 4, 0.15).unwrap();
        assert_eq!(odd.num_nodes(), 31);
        assert!(odd.structures.iter().all(|s| s.cluster_sizes.iter().sum::<usize>() == 31));
        assert_eq!(odd.num_views(), 4);
        assert_eq!(scaled_paper_spec(120, 9, 0.15).unwrap().structures, default_paper_spec(0.15).structures);
    }
}
