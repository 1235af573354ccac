use serde::{Deserialize, Serialize};

/// How pooled eigenvalues compete for the `R` embedding columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Largest values first.
    Value,
    /// Largest magnitudes first.
    Magnitude,
    /// Largest values first; values `<= 0` are never selected.
    Clipped,
}

impl Ranking {
    fn key(self, v: f64) -> f64 {
        match self {
            Ranking::Value => v,
            Ranking::Magnitude => v.abs(),
            Ranking::Clipped => v.max(0.0),
        }
    }

    fn admits(self, v: f64) -> bool {
        match self {
            Ranking::Clipped => v > 0.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Chosen positions within each cluster's sequence, ascending.
    pub indices: Vec<Vec<usize>>,
    /// Values at those positions.
    pub values: Vec<Vec<f64>>,
    /// All chosen `(cluster, position)` pairs in rank order.
    pub order: Vec<(usize, usize)>,
}

impl SelectionResult {
    pub fn total(&self) -> usize {
        self.order.len()
    }
}

/// Selects the top-`r` entries of the pooled per-cluster sequences under
/// `ranking`. Ties go to the lower cluster index, then the lower position.
pub fn global_top_r_selection(
    per_cluster_values: &[Vec<f64>],
    r: usize,
    ranking: Ranking,
) -> SelectionResult {
    let mut pool: Vec<(f64, usize, usize)> = per_cluster_values
        .iter()
        .enumerate()
        .flat_map(|(m, vals)| {
            vals.iter()
                .enumerate()
                .filter(|(_, &v)| ranking.admits(v))
                .map(move |(i, &v)| (ranking.key(v), m, i))
        })
        .collect();
    pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pool.truncate(r);

    let clusters = per_cluster_values.len();
    let mut indices = vec![Vec::new(); clusters];
    let order: Vec<(usize, usize)> = pool.iter().map(|&(_, m, i)| (m, i)).collect();
    for &(m, i) in &order {
        indices[m].push(i);
    }
    for idx in &mut indices {
        idx.sort_unstable();
    }
    let values = indices
        .iter()
        .enumerate()
        .map(|(m, idx)| idx.iter().map(|&i| per_cluster_values[m][i]).collect())
        .collect();
    SelectionResult {
        indices,
        values,
        order,
    }
}
