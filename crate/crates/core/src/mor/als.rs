//! Separated least-squares regression over snapshots (sparse builder for the
//! nonlinear parametric problem).
//!
//! Greedy rank-one enrichment: each term minimizes the squared residual over
//! all snapshots by alternating least squares between the space vector and
//! the per-axis grid functions (piecewise-linear between grid nodes). The
//! training residual never increases with rank.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::mor::{BuildMethod, ParameterSpace, SeparatedSolution, SnapshotSet};
use crate::Result;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub rank: usize,
    /// Relative Tikhonov regularization of the grid-function updates.
    pub regularization: f64,
    pub max_sweeps: usize,
    /// Sweep stop: relative change of the rank-one term.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            rank: 10,
            regularization: 1e-10,
            max_sweeps: 50,
            tol: 1e-8,
        }
    }
}

/// Fit diagnostics.
#[derive(Debug, Clone, Default)]
pub struct FitReport {
    /// Root-mean-square training residual after each enrichment.
    pub training_rms: Vec<f64>,
    /// Conditioning warnings from regularized solves.
    pub warnings: Vec<String>,
}

/// Hat-function weights of one sample on one axis grid.
#[derive(Clone, Copy)]
struct HatWeight {
    seg: usize,
    t: f64,
}

impl HatWeight {
    fn dot(&self, values: &DVector<f64>) -> f64 {
        (1.0 - self.t) * values[self.seg] + self.t * values[self.seg + 1]
    }
}

/// Builds a separated solution by alternating least squares over snapshots.
pub fn fit_separated(
    snapshots: &SnapshotSet,
    pspace: &ParameterSpace,
    options: &FitOptions,
) -> Result<(SeparatedSolution, FitReport)> {
    if options.rank == 0 {
        return Err(Error::argument("rank must be at least 1"));
    }
    if snapshots.is_empty() {
        return Err(Error::argument("no snapshots"));
    }
    if options.rank > snapshots.len() {
        return Err(Error::argument(format!(
            "rank {} exceeds snapshot count {}",
            options.rank,
            snapshots.len()
        )));
    }
    let n_dofs = snapshots.samples[0].1.len();
    let dim = snapshots.samples[0].1.dim();
    let n_params = pspace.n_params();
    let n_samples = snapshots.len();

    // hat weights per sample and axis
    let mut hats: Vec<Vec<HatWeight>> = Vec::with_capacity(n_samples);
    for (mu, u) in &snapshots.samples {
        if u.len() != n_dofs {
            return Err(Error::argument("snapshots on different meshes"));
        }
        if mu.len() != n_params {
            return Err(Error::argument("sample parameter dimension mismatch"));
        }
        hats.push(
            (0..n_params)
                .map(|k| {
                    let (seg, t) = pspace.locate(k, mu[k]);
                    HatWeight { seg, t }
                })
                .collect(),
        );
    }

    // residual columns, updated after each enrichment
    let mut residual: Vec<DVector<f64>> = snapshots
        .samples
        .iter()
        .map(|(_, u)| u.as_vector().clone())
        .collect();

    let mut solution = SeparatedSolution::empty(
        pspace.clone(),
        n_dofs / dim,
        dim,
        BuildMethod::SparsePgd,
        snapshots.mesh_tag.clone(),
    );
    let mut report = FitReport::default();

    for _term in 0..options.rank {
        // deterministic init: residual column of largest norm, flat axes
        let seed_col = (0..n_samples)
            .max_by(|&a, &b| {
                residual[a]
                    .norm()
                    .partial_cmp(&residual[b].norm())
                    .unwrap()
            })
            .expect("non-empty");
        let mut space = residual[seed_col].clone();
        if space.norm() == 0.0 {
            // residual exhausted; stop enriching early
            break;
        }
        let mut grids: Vec<DVector<f64>> = (0..n_params)
            .map(|k| DVector::from_element(pspace.grid_size(k), 1.0))
            .collect();

        let mut prev_space = space.clone();
        let mut prev_coeff: Vec<f64> = vec![0.0; n_samples];
        for _sweep in 0..options.max_sweeps {
            // per-sample scalar factor of the current term
            let coeff: Vec<f64> = (0..n_samples)
                .map(|j| {
                    (0..n_params)
                        .map(|k| hats[j][k].dot(&grids[k]))
                        .product::<f64>()
                })
                .collect();

            // space update: F = sum_j a_j R_j / sum_j a_j^2
            let denom: f64 = coeff.iter().map(|a| a * a).sum();
            if denom == 0.0 {
                break;
            }
            let mut f = DVector::zeros(n_dofs);
            for (j, r) in residual.iter().enumerate() {
                f.axpy(coeff[j], r, 1.0);
            }
            f /= denom;
            let f_norm2 = f.dot(&f);
            if f_norm2 == 0.0 {
                space = f;
                break;
            }

            // axis updates
            let fr: Vec<f64> = residual.iter().map(|r| f.dot(r)).collect();
            for k in 0..n_params {
                let gk = pspace.grid_size(k);
                let mut a = DMatrix::<f64>::zeros(gk, gk);
                let mut b = DVector::<f64>::zeros(gk);
                for j in 0..n_samples {
                    let other: f64 = (0..n_params)
                        .filter(|&kk| kk != k)
                        .map(|kk| hats[j][kk].dot(&grids[kk]))
                        .product();
                    let h = hats[j][k];
                    let w = [(h.seg, 1.0 - h.t), (h.seg + 1, h.t)];
                    for &(r, wr) in &w {
                        b[r] += other * fr[j] * wr;
                        for &(c, wc) in &w {
                            a[(r, c)] += f_norm2 * other * other * wr * wc;
                        }
                    }
                }
                let mean_diag = a.trace() / gk as f64;
                let reg = options.regularization.max(0.0) * mean_diag.max(1e-300);
                for d in 0..gk {
                    a[(d, d)] += reg;
                }
                let solved = a.clone().cholesky().map(|c| c.solve(&b));
                grids[k] = match solved {
                    Some(g) => g,
                    None => {
                        // grid nodes without sample coverage: fall back to a
                        // stiffer ridge and warn
                        report.warnings.push(format!(
                            "ill-conditioned update on axis {k}; ridge increased"
                        ));
                        let mut a2 = a.clone();
                        let bump = mean_diag.max(1e-300) * 1e-6;
                        for d in 0..gk {
                            a2[(d, d)] += bump;
                        }
                        a2.cholesky()
                            .ok_or_else(|| {
                                Error::argument("alternation step irrecoverably singular")
                            })?
                            .solve(&b)
                    }
                };
            }

            // relative change of the rank-one term over samples
            let new_coeff: Vec<f64> = (0..n_samples)
                .map(|j| {
                    (0..n_params)
                        .map(|k| hats[j][k].dot(&grids[k]))
                        .product::<f64>()
                })
                .collect();
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n_samples {
                let d = (&f * new_coeff[j] - &prev_space * prev_coeff[j]).norm_squared();
                num += d;
                den += (new_coeff[j] * &f).norm_squared();
            }
            prev_space = f.clone();
            prev_coeff = new_coeff;
            space = f;
            if den > 0.0 && (num / den).sqrt() < options.tol {
                break;
            }
        }

        // subtract the converged term from the residual
        let coeff: Vec<f64> = (0..n_samples)
            .map(|j| {
                (0..n_params)
                    .map(|k| hats[j][k].dot(&grids[k]))
                    .product::<f64>()
            })
            .collect();
        if space.norm() == 0.0 || coeff.iter().all(|&c| c == 0.0) {
            break;
        }
        for (j, r) in residual.iter_mut().enumerate() {
            r.axpy(-coeff[j], &space, 1.0);
        }
        solution.push_mode(space, grids)?;

        let rms = (residual.iter().map(|r| r.norm_squared()).sum::<f64>()
            / (n_samples * n_dofs) as f64)
            .sqrt();
        report.training_rms.push(rms);
    }

    Ok((solution, report))
}
