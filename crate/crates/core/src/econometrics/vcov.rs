use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{pairwise_sum, spd_inverse, Matrix};
use super::EstimationError;

/// Finite-sample scaling of the clustered sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterCorrection {
    #[default]
    None,
    /// `G/(G-1) * (n-1)/(n-k)`.
    SmallSample,
}

/// Cluster-robust sandwich `H^-1 (sum_g s_g s_g') H^-1`, where `s_g` sums the
/// per-observation scores (rows of `scores`) within cluster `g` and `hessian`
/// is the log-likelihood Hessian.
pub fn clustered_vcov(
    scores: &Matrix,
    hessian: &Matrix,
    cluster: &[usize],
    n_clusters: usize,
    correction: ClusterCorrection,
) -> Result<Matrix, EstimationError> {
    let (n, k) = (scores.rows(), scores.cols());
    assert_eq!(cluster.len(), n, "one cluster index per score row");
    assert_eq!((hessian.rows(), hessian.cols()), (k, k), "hessian shape");

    let mut info = hessian.clone();
    info.scale(-1.0);
    let bread = spd_inverse(&info).map_err(|_| EstimationError::RankDeficient)?;

    let mut sums = Matrix::zeros(n_clusters, k);
    for (i, &g) in cluster.iter().enumerate() {
        let row = scores.row(i);
        for (acc, s) in sums.row_mut(g).iter_mut().zip(row) {
            *acc += s;
        }
    }
    let mut meat = Matrix::zeros(k, k);
    let mut terms = vec![0.0; n_clusters];
    for a in 0..k {
        for b in a..k {
            for (g, t) in terms.iter_mut().enumerate() {
                *t = sums[(g, a)] * sums[(g, b)];
            }
            meat[(a, b)] = pairwise_sum(&terms);
        }
    }
    meat.symmetrize_from_upper();

    let mut v = bread.matmul(&meat).matmul(&bread);
    if correction == ClusterCorrection::SmallSample && n_clusters > 1 && n > k {
        let g = n_clusters as f64;
        v.scale(g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64));
    }
    for i in 0..k {
        for j in 0..i {
            let m = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = m;
            v[(j, i)] = m;
        }
    }
    Ok(v)
}

/// Square roots of the diagonal.
pub fn standard_errors(v: &Matrix) -> Vec<f64> {
    (0..v.rows()).map(|i| libm::sqrt(v[(i, i)].max(0.0))).collect()
}
