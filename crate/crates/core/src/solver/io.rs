use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ConstraintMode, GenClusModel};
use crate::error::{Error, Result};

/// On-disk form of a factor model: dense `U`, `(row, col, value)` triplets
/// for `A` and `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub num_nodes: usize,
    pub num_views: usize,
    pub num_clusters: usize,
    pub rank: usize,
    pub u: Vec<Vec<f64>>,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ConstraintMode>,
    pub partition: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

pub(crate) fn triplets(m: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    m.indexed_iter()
        .filter(|(_, &v)| v != 0.0)
        .map(|((i, j), &v)| (i, j, v))
        .collect()
}

pub(crate) fn from_triplets(rows: usize, cols: usize, t: &[(usize, usize, f64)], what: &str) -> Result<Array2<f64>> {
    let mut m = Array2::<f64>::zeros((rows, cols));
    for &(i, j, v) in t {
        if i >= rows || j >= cols {
            return Err(Error::Dimension(format!("{what} entry ({i}, {j}) outside {rows}x{cols}")));
        }
        m[[i, j]] = v;
    }
    Ok(m)
}

impl ModelFile {
    pub fn from_factors(
        kind: &str,
        u: &Array2<f64>,
        a: &Array2<f64>,
        b: &Array2<f64>,
        partition: Vec<Option<usize>>,
    ) -> Self {
        Self {
            kind: kind.to_string(),
            num_nodes: u.nrows(),
            num_views: a.nrows(),
            num_clusters: a.ncols(),
            rank: u.ncols(),
            u: u.outer_iter().map(|r| r.to_vec()).collect(),
            a: triplets(a),
            b: triplets(b),
            mode: None,
            partition,
            rho: None,
        }
    }

    pub fn u(&self) -> Result<Array2<f64>> {
        if self.u.len() != self.num_nodes || self.u.iter().any(|r| r.len() != self.rank) {
            return Err(Error::Dimension(format!("U must be {}x{}", self.num_nodes, self.rank)));
        }
        let flat: Vec<f64> = self.u.iter().flatten().copied().collect();
        Array2::from_shape_vec((self.num_nodes, self.rank), flat).map_err(|e| Error::Dimension(e.to_string()))
    }

    pub fn a(&self) -> Result<Array2<f64>> {
        from_triplets(self.num_views, self.num_clusters, &self.a, "A")
    }

    pub fn b(&self) -> Result<Array2<f64>> {
        from_triplets(self.num_clusters, self.rank, &self.b, "B")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }

    pub fn to_genclus(&self) -> Result<GenClusModel> {
        if self.partition.len() != self.rank {
            return Err(Error::Dimension("partition length differs from rank".into()));
        }
        Ok(GenClusModel {
            u: self.u()?,
            a: self.a()?,
            b: self.b()?,
            mode: self.mode.unwrap_or_default(),
            partition: self.partition.clone(),
        })
    }
}

impl From<&GenClusModel> for ModelFile {
    fn from(m: &GenClusModel) -> Self {
        let mut f = ModelFile::from_factors("genclus", &m.u, &m.a, &m.b, m.partition.clone());
        f.mode = Some(m.mode);
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NormalizationKind, NormalizedTensor};
    use crate::solver::init_model;

    #[test]
    fn json_round_trip() {
        let y = NormalizedTensor::new(vec![Array2::eye(4); 3], NormalizationKind::Raw).unwrap();
        let m = init_model(&y, 3, 2, ConstraintMode::default(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        ModelFile::from(&m).save(&p).unwrap();
        let back = ModelFile::load(&p).unwrap().to_genclus().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn out_of_range_triplet() {
        assert!(from_triplets(2, 2, &[(2, 0, 1.0)], "A").is_err());
    }
}
