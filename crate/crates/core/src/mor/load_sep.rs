//! Separation of parameter-dependent loads into sums of space x parameter
//! products.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Load in separated form: t(., s) ~= sum_j h_j(.) k_j(s), discretized as
/// space dof vectors paired with grid functions over the load parameter.
#[derive(Debug, Clone)]
pub struct SeparatedLoad {
    pub terms: Vec<(DVector<f64>, DVector<f64>)>,
}

impl SeparatedLoad {
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Nodal load vector at grid index `q`: sum_j h_j k_j[q].
    pub fn rhs_at(&self, q: usize) -> DVector<f64> {
        let n = self.terms.first().map(|(h, _)| h.len()).unwrap_or(0);
        let mut rhs = DVector::zeros(n);
        for (h, k) in &self.terms {
            rhs.axpy(k[q], h, 1.0);
        }
        rhs
    }

    /// Dense reconstruction (dofs x grid) of the separated sum.
    pub fn reconstruct(&self, n_dofs: usize, grid_len: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n_dofs, grid_len);
        for (h, k) in &self.terms {
            m += h * k.transpose();
        }
        m
    }
}

/// Exact separation of a moving nodal point load: the load at grid position
/// `q` is a single force of `magnitude` on dof `loaded_dof_per_grid[q]`.
///
/// On coincident space/parameter grids the separation is the identity-like
/// pairing of each loaded dof with an indicator over the grid, with one term
/// per grid node and zero reconstruction error.
pub fn separate_delta_load(
    n_dofs: usize,
    loaded_dof_per_grid: &[usize],
    magnitude: f64,
) -> Result<SeparatedLoad> {
    let grid_len = loaded_dof_per_grid.len();
    if grid_len == 0 {
        return Err(Error::argument("empty load grid"));
    }
    let mut terms = Vec::with_capacity(grid_len);
    for (q, &dof) in loaded_dof_per_grid.iter().enumerate() {
        if dof >= n_dofs {
            return Err(Error::argument(format!("loaded dof {dof} out of range")));
        }
        let mut h = DVector::zeros(n_dofs);
        h[dof] = magnitude;
        let mut k = DVector::zeros(grid_len);
        k[q] = 1.0;
        terms.push((h, k));
    }
    Ok(SeparatedLoad { terms })
}

/// Separates an arbitrary discretized load matrix (dofs x grid) by singular
/// value decomposition, keeping the fewest terms that reconstruct the matrix
/// to `tol` relative Frobenius error.
///
/// Fails when more than `max_terms` would be needed, reporting the error
/// achievable with `max_terms`.
pub fn separate_load(
    load_matrix: &DMatrix<f64>,
    max_terms: usize,
    tol: f64,
) -> Result<SeparatedLoad> {
    if load_matrix.is_empty() {
        return Err(Error::argument("empty load matrix"));
    }
    // directions below 1e-7 relative amplitude are numerical noise of the
    // Gram factorization and are treated as exact zeros
    let triplets = crate::mor::gram::singular_triplets(load_matrix, 1e-7);
    if triplets.is_empty() {
        return Ok(SeparatedLoad { terms: Vec::new() });
    }
    let total: f64 = triplets.iter().map(|(s, _, _)| s * s).sum();
    // suffix energy: tail(j) = sum_{i >= j} sigma_i^2, computed without
    // cancellation
    let mut tail = vec![0.0; triplets.len() + 1];
    for j in (0..triplets.len()).rev() {
        tail[j] = tail[j + 1] + triplets[j].0 * triplets[j].0;
    }
    let needed = (0..=triplets.len())
        .find(|&j| tail[j].sqrt() <= tol * total.sqrt())
        .unwrap_or(triplets.len());
    if needed > max_terms {
        return Err(Error::ApproximationTolerance {
            terms: max_terms,
            achieved: tail[max_terms.min(triplets.len())].sqrt() / total.sqrt(),
            tolerance: tol,
        });
    }
    let terms = triplets
        .into_iter()
        .take(needed)
        .map(|(sigma, u, v)| (u * sigma, v))
        .collect();
    Ok(SeparatedLoad { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_load_is_exact_identity_pairing() {
        let dofs = [3usize, 5, 7, 9];
        let sep = separate_delta_load(12, &dofs, -2.5).unwrap();
        assert_eq!(sep.n_terms(), dofs.len());
        for (q, &dof) in dofs.iter().enumerate() {
            let rhs = sep.rhs_at(q);
            assert_relative_eq!(rhs[dof], -2.5);
            assert_relative_eq!(rhs.norm(), 2.5);
        }
        // reconstruction is exact
        let m = sep.reconstruct(12, dofs.len());
        for (q, &dof) in dofs.iter().enumerate() {
            assert_relative_eq!(m[(dof, q)], -2.5);
        }
        assert_relative_eq!(m.norm(), 2.5 * 2.0);
    }

    #[test]
    fn constant_profile_is_rank_one() {
        // load independent of s
        let h = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
        let m = DMatrix::from_fn(4, 6, |r, _| h[r]);
        let sep = separate_load(&m, 10, 1e-12).unwrap();
        assert_eq!(sep.n_terms(), 1);
        let k = &sep.terms[0].1;
        for q in 1..6 {
            assert_relative_eq!(k[q], k[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_profile_error_decreases_monotonically() {
        // smoothed moving load; fresh SVD of the matrix is the oracle
        let n = 30;
        let g = 25;
        let m = DMatrix::from_fn(n, g, |r, q| {
            let x = r as f64 / (n - 1) as f64;
            let s = q as f64 / (g - 1) as f64;
            (-((x - s) / 0.15).powi(2)).exp()
        });
        let sep = separate_load(&m, g, 1e-13).unwrap();
        let singular = m.clone().svd(false, false).singular_values;
        let mut prev = f64::INFINITY;
        for terms in 1..=8 {
            let partial = SeparatedLoad {
                terms: sep.terms[..terms].to_vec(),
            };
            let err = (&m - partial.reconstruct(n, g)).norm();
            assert!(err < prev, "error not decreasing at {terms} terms");
            // tail singular-value energy predicts the truncation error
            let tail: f64 = singular.iter().skip(terms).map(|s| s * s).sum::<f64>().sqrt();
            assert_relative_eq!(err, tail, epsilon = 1e-12, max_relative = 1e-6);
            prev = err;
        }
    }

    #[test]
    fn insufficient_terms_reports_achieved_error() {
        let m = DMatrix::from_fn(6, 6, |r, q| if r == q { 1.0 } else { 0.0 });
        let err = separate_load(&m, 2, 1e-8).unwrap_err();
        match err {
            Error::ApproximationTolerance {
                terms, achieved, ..
            } => {
                assert_eq!(terms, 2);
                assert_relative_eq!(achieved, (4.0f64 / 6.0).sqrt(), epsilon = 1e-12);
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
