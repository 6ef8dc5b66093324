//! Singular triplets of tall matrices via the Gram matrix (method of
//! snapshots). nalgebra's bidiagonal SVD mishandles some rank-deficient
//! snapshot matrices, while the symmetric eigensolver on A^T A is reliable
//! and cheaper when the column count is small.

use nalgebra::{DMatrix, DVector};

/// Descending singular triplets (sigma_i, u_i, v_i) of `a` with
/// sigma_i > rel_cutoff * sigma_0. Left vectors are recovered as
/// A v_i / sigma_i; signs are fixed so the first nonzero component of each
/// v_i is positive.
pub(crate) fn singular_triplets(
    a: &DMatrix<f64>,
    rel_cutoff: f64,
) -> Vec<(f64, DVector<f64>, DVector<f64>)> {
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let sigma_max = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let mut out = Vec::new();
    if sigma_max == 0.0 {
        return out;
    }
    for &idx in &order {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        if sigma <= rel_cutoff * sigma_max || sigma == 0.0 {
            break;
        }
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        if let Some(&first) = v.iter().find(|&&x| x != 0.0) {
            if first < 0.0 {
                v = -v;
            }
        }
        let u = a * &v / sigma;
        out.push((sigma, u, v));
    }
    out
}
