//! Greedy rank-one enrichment of the linear parametric problem.
//!
//! Solves K U(s) = f(s) for all load-parameter grid values at once: each
//! enrichment searches a pair (R(X), S(s)) by fixed-point alternation so that
//! U <- U + R o S reduces the weak-form residual, with the test-function
//! structure R* o S + R o S*. Because the operator does not depend on s, the
//! space update reuses one stiffness factorization for every sweep and the
//! parameter update is pointwise algebraic.
//!
//! Space modes are kept K-orthogonal, so each parameter mode is the exact
//! Galerkin coefficient of its space mode independently of rank, and rank-r
//! truncations coincide with the rank-r reduced solution (monotone error).

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{factorization::CscCholesky, CscMatrix};

use crate::error::Error;
use crate::fem::{linear_stiffness, DofMap, MaterialLaw, Mesh};
use crate::mor::{BuildMethod, ParameterSpace, SeparatedLoad, SeparatedSolution};
use crate::Result;

/// Enrichment and fixed-point controls.
#[derive(Debug, Clone)]
pub struct PgdOptions {
    /// Fixed-point stop: relative change of the rank-one update.
    pub fixed_point_tol: f64,
    /// Fixed-point sweep cap per enrichment.
    pub max_sweeps: usize,
    /// Enrichment stop: new-mode amplitude relative to the first mode.
    pub enrich_tol: f64,
    /// Rank cap.
    pub max_rank: usize,
}

impl Default for PgdOptions {
    fn default() -> Self {
        PgdOptions {
            fixed_point_tol: 1e-4,
            max_sweeps: 25,
            enrich_tol: 1e-4,
            max_rank: 50,
        }
    }
}

/// Trapezoid quadrature weights of a 1D grid.
fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for q in 0..n - 1 {
        let h = grid[q + 1] - grid[q];
        w[q] += 0.5 * h;
        w[q + 1] += 0.5 * h;
    }
    w
}

/// Builds the separated solution U(X, s) of the linear problem with a
/// separated load over a single load-position parameter.
///
/// The mesh must carry a homogeneous Dirichlet boundary; the load grid must
/// match the parameter grid of `pspace`.
pub fn pgd_build(
    mesh: &Mesh,
    law: &MaterialLaw,
    load: &SeparatedLoad,
    pspace: &ParameterSpace,
    options: &PgdOptions,
) -> Result<SeparatedSolution> {
    let MaterialLaw::Linear { young, poisson } = *law else {
        return Err(Error::argument("pgd_build requires the linear law"));
    };
    if pspace.n_params() != 1 {
        return Err(Error::argument(
            "pgd_build handles a single load-position parameter",
        ));
    }
    if mesh.dirichlet.is_empty() {
        return Err(Error::argument("mesh needs a Dirichlet boundary"));
    }
    if mesh.dirichlet.values().any(|v| v.iter().any(|&x| x != 0.0)) {
        return Err(Error::argument(
            "pgd_build expects homogeneous Dirichlet conditions",
        ));
    }
    let n_grid = pspace.grid_size(0);
    for (h, k) in &load.terms {
        if h.len() != mesh.dof_count() || k.len() != n_grid {
            return Err(Error::argument("load terms do not match mesh/grid sizes"));
        }
    }

    let mut solution = SeparatedSolution::empty(
        pspace.clone(),
        mesh.node_count(),
        mesh.dim(),
        BuildMethod::Pgd,
        "pgd",
    );

    let dofmap = DofMap::new(mesh);
    let stiffness = dofmap.reduce_matrix(&linear_stiffness(mesh, young, poisson)?);
    let csc = CscMatrix::from(&stiffness);
    let chol = CscCholesky::factor(&csc)
        .map_err(|e| Error::Geometry(format!("stiffness factorization failed: {e:?}")))?;
    let solve = |rhs: &DVector<f64>| -> DVector<f64> {
        let b = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
        chol.solve(&b).column(0).clone_owned()
    };

    // everything below works on free dofs
    let h_free: Vec<DVector<f64>> = load
        .terms
        .iter()
        .map(|(h, _)| dofmap.restrict(h))
        .collect();
    let k_funcs: Vec<&DVector<f64>> = load.terms.iter().map(|(_, k)| k).collect();
    let weights = trapezoid_weights(&pspace.axis(0).grid);

    if load.terms.is_empty() || h_free.iter().all(|h| h.norm() == 0.0) {
        return Ok(solution);
    }

    // enrichment state: K-orthogonal space modes, their images K F_i, the
    // Galerkin diagonal d_i = F_i^T K F_i and the parameter modes
    let mut modes_f: Vec<DVector<f64>> = Vec::new();
    let mut modes_kf: Vec<DVector<f64>> = Vec::new();
    let mut modes_d: Vec<f64> = Vec::new();
    let mut modes_g: Vec<DVector<f64>> = Vec::new();
    let mut first_amplitude: Option<f64> = None;

    'enrich: for _ in 0..options.max_rank {
        // fixed-point alternation for the new pair (R, S)
        let mut s_fn = DVector::from_element(n_grid, 1.0);
        let mut r_fn = DVector::zeros(dofmap.free_count());
        let mut change = f64::INFINITY;
        let mut converged = false;
        for _sweep in 0..options.max_sweeps {
            // space update: [int S^2 ds] K R = int S (f - K U_p) ds
            let s2: f64 = (0..n_grid).map(|q| weights[q] * s_fn[q] * s_fn[q]).sum();
            if s2 == 0.0 {
                break;
            }
            let mut rhs = DVector::zeros(dofmap.free_count());
            for (h, k) in h_free.iter().zip(&k_funcs) {
                let c: f64 = (0..n_grid).map(|q| weights[q] * s_fn[q] * k[q]).sum();
                rhs.axpy(c, h, 1.0);
            }
            for (kf, g) in modes_kf.iter().zip(&modes_g) {
                let c: f64 = (0..n_grid).map(|q| weights[q] * s_fn[q] * g[q]).sum();
                rhs.axpy(-c, kf, 1.0);
            }
            let r_new = solve(&rhs) / s2;

            // parameter update: pointwise, quadrature weights cancel
            let kr = &csc * &r_new;
            let alpha = r_new.dot(&kr);
            if alpha <= 0.0 {
                break;
            }
            let rh: Vec<f64> = h_free.iter().map(|h| r_new.dot(h)).collect();
            let rkf: Vec<f64> = modes_f.iter().map(|f| kr.dot(f)).collect();
            let mut s_new = DVector::zeros(n_grid);
            for q in 0..n_grid {
                let mut beta = 0.0;
                for (j, k) in k_funcs.iter().enumerate() {
                    beta += rh[j] * k[q];
                }
                for (i, g) in modes_g.iter().enumerate() {
                    beta -= rkf[i] * g[q];
                }
                s_new[q] = beta / alpha;
            }

            // relative change of the rank-one update R S^T
            let nn = r_new.norm() * s_new.norm();
            let oo = r_fn.norm() * s_fn.norm();
            let cross = r_new.dot(&r_fn) * s_new.dot(&s_fn);
            let diff2 = (nn * nn - 2.0 * cross + oo * oo).max(0.0);
            change = if nn > 0.0 { diff2.sqrt() / nn } else { 0.0 };
            r_fn = r_new;
            s_fn = s_new;
            if change < options.fixed_point_tol {
                converged = true;
                break;
            }
        }
        // A pair that stalls slightly above the tolerance is still a valid
        // greedy direction (the Galerkin coefficient below does not depend on
        // fixed-point accuracy); only a genuinely unconverged alternation is
        // an error.
        if !converged && change.is_finite() && change >= 1.0 {
            return Err(Error::Enrichment {
                sweeps: options.max_sweeps,
                sweep_residual: change,
            });
        }

        // K-orthogonalize against accumulated modes; the residual-driven
        // update is already K-orthogonal analytically, this removes roundoff
        for ((f, kf), &d) in modes_f.iter().zip(&modes_kf).zip(&modes_d) {
            let c = kf.dot(&r_fn) / d;
            r_fn.axpy(-c, f, 1.0);
        }

        let amplitude = r_fn.norm() * s_fn.norm();
        match first_amplitude {
            None => {
                if amplitude == 0.0 {
                    break 'enrich; // zero right-hand side after reduction
                }
                first_amplitude = Some(amplitude);
            }
            Some(first) => {
                if amplitude < options.enrich_tol * first {
                    break 'enrich;
                }
            }
        }

        let kf = &csc * &r_fn;
        let d = r_fn.dot(&kf);
        if d <= 0.0 {
            break 'enrich;
        }
        // exact Galerkin coefficient of this mode (independent of rank
        // because the basis is K-orthogonal)
        let fh: Vec<f64> = h_free.iter().map(|h| r_fn.dot(h)).collect();
        let mut g = DVector::zeros(n_grid);
        for q in 0..n_grid {
            let mut v = 0.0;
            for (j, k) in k_funcs.iter().enumerate() {
                v += fh[j] * k[q];
            }
            g[q] = v / d;
        }
        modes_f.push(r_fn);
        modes_kf.push(kf);
        modes_d.push(d);
        modes_g.push(g);
    }

    // lift free-dof modes to the full dof set (zeros on the Dirichlet set)
    for (f, g) in modes_f.into_iter().zip(modes_g) {
        let mut full = DVector::zeros(mesh.dof_count());
        dofmap.scatter_add(&f, &mut full);
        solution.push_mode(full, vec![g])?;
    }
    Ok(solution)
}
