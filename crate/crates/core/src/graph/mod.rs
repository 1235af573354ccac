//! Multi-view graph storage and the spectral preprocessing that turns raw
//! adjacency slices into the solver's input tensor.

mod coo;
mod normalize;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coo::{load_coo_tensor, load_truth, save_coo_tensor, save_truth, GroundTruth};
pub use normalize::{
    directed_normalize, normalize, raw_symmetrized, symmetric_normalize, NormalizationKind,
    NormalizedTensor, DEFAULT_TELEPORT,
};

/// One adjacency slice in coordinate-list form. Duplicate coordinates are
/// allowed and add up when materialized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSlice {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSlice {
    pub fn new(entries: Vec<(usize, usize, f64)>) -> Self {
        Self { entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self, n: usize) -> Array2<f64> {
        let mut out = Array2::zeros((n, n));
        for &(i, j, w) in &self.entries {
            out[[i, j]] += w;
        }
        out
    }

    /// Sorted entries with duplicates summed.
    fn aggregated(&self) -> Vec<(usize, usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (i, j, w) in e {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => out.push((i, j, w)),
            }
        }
        out
    }

    /// Returns the first coordinate whose transpose carries a different weight.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        let agg = self.aggregated();
        let lookup = |i: usize, j: usize| -> f64 {
            agg.binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
                .map(|p| agg[p].2)
                .unwrap_or(0.0)
        };
        for &(i, j, w) in &agg {
            if i == j {
                continue;
            }
            let wt = lookup(j, i);
            let scale = w.abs().max(wt.abs()).max(1.0);
            if (w - wt).abs() > 1e-12 * scale {
                return Some((i, j));
            }
        }
        None
    }
}

/// An order-3 adjacency tensor of size `I x I x K` stored slice by slice,
/// with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewGraph {
    num_nodes: usize,
    slices: Vec<SparseSlice>,
    symmetric: bool,
    /// Node labels per view structure (structure id -> label of every node).
    pub node_labels: BTreeMap<usize, Vec<usize>>,
    /// View structure id of every view.
    pub view_labels: Option<Vec<usize>>,
}

impl MultiViewGraph {
    /// Validates indices and weights; when `symmetric` is set every slice
    /// must equal its transpose.
    pub fn new(num_nodes: usize, slices: Vec<SparseSlice>, symmetric: bool) -> Result<Self> {
        for (k, slice) in slices.iter().enumerate() {
            for &(i, j, w) in &slice.entries {
                if i >= num_nodes || j >= num_nodes {
                    return Err(Error::Dimension(format!(
                        "view {k}: entry ({i}, {j}) out of range for {num_nodes} nodes"
                    )));
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidWeight {
                        view: k,
                        row: i,
                        col: j,
                        weight: w,
                    });
                }
            }
            if symmetric {
                if let Some((row, col)) = slice.asymmetry() {
                    return Err(Error::NonSymmetricSlice { view: k, row, col });
                }
            }
        }
        Ok(Self {
            num_nodes,
            slices,
            symmetric,
            node_labels: BTreeMap::new(),
            view_labels: None,
        })
    }

    /// Builds a graph from dense slices, keeping only non-zero entries.
    pub fn from_dense(slices: &[Array2<f64>], symmetric: bool) -> Result<Self> {
        let n = slices.first().map(|s| s.nrows()).unwrap_or(0);
        let mut sparse = Vec::with_capacity(slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::Dimension(format!(
                    "view {k} has shape {:?}, expected ({n}, {n})",
                    s.dim()
                )));
            }
            let entries = s
                .indexed_iter()
                .filter(|(_, &w)| w != 0.0)
                .map(|((i, j), &w)| (i, j, w))
                .collect();
            sparse.push(SparseSlice::new(entries));
        }
        Self::new(n, sparse, symmetric)
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        if truth.view_labels.len() != self.num_views() {
            return Err(Error::Dimension(format!(
                "truth has {} view labels for {} views",
                truth.view_labels.len(),
                self.num_views()
            )));
        }
        for (s, labels) in &truth.node_labels {
            if labels.len() != self.num_nodes {
                return Err(Error::Dimension(format!(
                    "structure {s}: {} node labels for {} nodes",
                    labels.len(),
                    self.num_nodes
                )));
            }
        }
        self.view_labels = Some(truth.view_labels);
        self.node_labels = truth.node_labels;
        Ok(self)
    }

    pub fn truth(&self) -> Option<GroundTruth> {
        self.view_labels.as_ref().map(|v| GroundTruth {
            view_labels: v.clone(),
            node_labels: self.node_labels.clone(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_views(&self) -> usize {
        self.slices.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn slices(&self) -> &[SparseSlice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &SparseSlice {
        &self.slices[k]
    }

    pub fn nnz(&self) -> usize {
        self.slices.iter().map(SparseSlice::nnz).sum()
    }

    /// Multiplies every weight of view `k` by `c`.
    pub fn scale_view(&mut self, k: usize, c: f64) {
        for e in &mut self.slices[k].entries {
            e.2 *= c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_negative() {
        let s = SparseSlice::new(vec![(0, 3, 1.0)]);
        assert!(matches!(
            MultiViewGraph::new(3, vec![s], false),
            Err(Error::Dimension(_))
        ));
        let s = SparseSlice::new(vec![(0, 1, -1.0)]);
        assert!(matches!(
            MultiViewGraph::new(3, vec![s], false),
            Err(Error::InvalidWeight { view: 0, .. })
        ));
        let s = SparseSlice::new(vec![(0, 1, f64::NAN)]);
        assert!(MultiViewGraph::new(3, vec![s], false).is_err());
    }

    #[test]
    fn symmetry_flag_is_checked() {
        let ok = SparseSlice::new(vec![(0, 1, 2.0), (1, 0, 1.5), (1, 0, 0.5)]);
        assert!(MultiViewGraph::new(2, vec![ok], true).is_ok());
        let bad = SparseSlice::new(vec![(0, 1, 2.0)]);
        let err = MultiViewGraph::new(2, vec![SparseSlice::default(), bad], true).unwrap_err();
        assert!(matches!(err, Error::NonSymmetricSlice { view: 1, .. }));
    }

    #[test]
    fn dense_round_trip() {
        let d = ndarray::array![[0.0, 1.0], [3.0, 0.0]];
        let g = MultiViewGraph::from_dense(&[d.clone()], false).unwrap();
        assert_eq!(g.slice(0).to_dense(2), d);
        assert_eq!(g.nnz(), 2);
    }
}
