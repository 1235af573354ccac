//! Label-agreement scores with the conventions of scikit-learn's
//! `adjusted_mutual_info_score`, `normalized_mutual_info_score` and
//! `adjusted_rand_score` (arithmetic-mean normalization).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Dense contingency table between two labelings, classes in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let order: BTreeMap<usize, usize> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    (labels.iter().map(|l| order[l]).collect(), order.len())
}

pub fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("labelings have lengths {} and {}", a.len(), b.len())));
    }
    let (ra, na) = relabel(a);
    let (rb, nb) = relabel(b);
    let mut counts = vec![vec![0u64; nb]; na];
    for (&i, &j) in ra.iter().zip(&rb) {
        counts[i][j] += 1;
    }
    let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums = (0..nb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency {
        counts,
        row_sums,
        col_sums,
        n: a.len() as u64,
    })
}

fn entropy_of(sums: &[u64]) -> f64 {
    if sums.len() <= 1 {
        return 0.0;
    }
    let total: f64 = sums.iter().map(|&s| s as f64).sum();
    -sums
        .iter()
        .map(|&s| {
            let p = s as f64;
            (p / total) * (p.ln() - total.ln())
        })
        .sum::<f64>()
}

/// Shannon entropy (nats) of a labeling.
pub fn entropy(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let c = contingency(labels, labels).expect("equal lengths");
    entropy_of(&c.row_sums)
}

fn mi_from(c: &Contingency) -> f64 {
    if c.row_sums.len() == 1 || c.col_sums.len() == 1 {
        return 0.0;
    }
    let total = c.n as f64;
    let log_pi_sum = total.ln();
    let mut mi = 0.0;
    for (i, row) in c.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let v = nij as f64;
            let frac = v / total;
            let outer = (c.row_sums[i] * c.col_sums[j]) as f64;
            let log_outer = -outer.ln() + log_pi_sum + log_pi_sum;
            let term = frac * (v.ln() - total.ln()) + frac * log_outer;
            if term.abs() >= f64::EPSILON {
                mi += term;
            }
        }
    }
    mi.max(0.0)
}

pub fn mutual_info(a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(mi_from(&contingency(a, b)?))
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Expected mutual information under the permutation (hypergeometric) model.
pub fn expected_mutual_info(c: &Contingency) -> f64 {
    let (a, b) = (&c.row_sums, &c.col_sums);
    if a.len() == 1 || b.len() == 1 {
        return 0.0;
    }
    let n = c.n as i64;
    let nf = c.n as f64;
    let max_nij = a.iter().chain(b.iter()).copied().max().unwrap_or(0) as usize;
    let mut log_nnij = vec![0.0; max_nij + 1];
    let mut gln_nnij = vec![0.0; max_nij + 1];
    for (v, (l, g)) in log_nnij.iter_mut().zip(gln_nnij.iter_mut()).enumerate() {
        let nij = v.max(1) as f64;
        *l = nf.ln() + nij.ln();
        *g = lgamma(nij + 1.0) + lgamma(nf + 1.0);
    }
    let mut emi = 0.0;
    for &ai in a {
        let ai_i = ai as i64;
        let ai_f = ai as f64;
        for &bj in b {
            let bj_i = bj as i64;
            let bj_f = bj as f64;
            let start = 1.max(ai_i - n + bj_i);
            let end = ai_i.min(bj_i) + 1;
            let fixed = lgamma(ai_f + 1.0) + lgamma(bj_f + 1.0) + lgamma(nf - ai_f + 1.0) + lgamma(nf - bj_f + 1.0);
            for nij in start..end {
                let idx = nij as usize;
                let term1 = nij as f64 / nf;
                let term2 = log_nnij[idx] - ai_f.ln() - bj_f.ln();
                let gln = fixed
                    - gln_nnij[idx]
                    - lgamma((ai_i - nij + 1) as f64)
                    - lgamma((bj_i - nij + 1) as f64)
                    - lgamma((n - ai_i - bj_i + nij + 1) as f64);
                emi += term1 * term2 * gln.exp();
            }
        }
    }
    emi
}

fn eps_guard(v: f64) -> f64 {
    if v < 0.0 {
        v.min(-f64::EPSILON)
    } else {
        v.max(f64::EPSILON)
    }
}

/// Adjusted mutual information.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = contingency(a, b)?;
    let (ka, kb) = (c.row_sums.len(), c.col_sums.len());
    if (ka == 1 && kb == 1) || (ka == 0 && kb == 0) {
        return Ok(1.0);
    }
    if ka == 1 || kb == 1 {
        return Ok(0.0);
    }
    let mi = mi_from(&c);
    let emi = expected_mutual_info(&c);
    let normalizer = (entropy_of(&c.row_sums) + entropy_of(&c.col_sums)) / 2.0;
    Ok(eps_guard(mi - emi) / eps_guard(normalizer - emi))
}

/// Normalized mutual information.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = contingency(a, b)?;
    let (ka, kb) = (c.row_sums.len(), c.col_sums.len());
    if (ka == 1 && kb == 1) || (ka == 0 && kb == 0) {
        return Ok(1.0);
    }
    let mi = mi_from(&c);
    if mi == 0.0 {
        return Ok(0.0);
    }
    let normalizer = (entropy_of(&c.row_sums) + entropy_of(&c.col_sums)) / 2.0;
    Ok(mi / normalizer)
}

/// Adjusted Rand index via the pair confusion matrix.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = contingency(a, b)?;
    let n = c.n as i128;
    let sum_sq: i128 = c.counts.iter().flatten().map(|&v| (v as i128) * (v as i128)).sum();
    let row_dot: i128 = c
        .counts
        .iter()
        .flat_map(|r| r.iter().enumerate().map(|(j, &v)| v as i128 * c.col_sums[j] as i128))
        .sum();
    let col_dot: i128 = c
        .counts
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&v| (i, v)))
        .map(|(i, v)| v as i128 * c.row_sums[i] as i128)
        .sum();
    let tp = sum_sq - n;
    let fp = row_dot - sum_sq;
    let fn_ = col_dot - sum_sq;
    let tn = n * n - fp - fn_ - sum_sq;
    if fn_ == 0 && fp == 0 {
        return Ok(1.0);
    }
    let num = 2.0 * ((tp * tn - fn_ * fp) as f64);
    let den = ((tp + fn_) * (fn_ + tn) + (tp + fp) * (fp + tn)) as f64;
    Ok(num / den)
}
