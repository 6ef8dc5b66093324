//! Newton solution of the static equilibrium problem.
//!
//! Dirichlet conditions are eliminated (free-dof reduction, no penalty), the
//! reduced tangent is factored by sparse Cholesky, and the external loads and
//! prescribed displacements are ramped in increments for the nonlinear law.
//! Failed increments (non-convergence, indefinite tangent or an inadmissible
//! deformation state) trigger step halving from the last converged state.

use nalgebra::DMatrix;
use nalgebra_sparse::{factorization::CscCholesky, CscMatrix};

use crate::error::Error;
use crate::fem::assembly::{assemble_with_loads, external_force, DofMap, Loads};
use crate::fem::{MaterialLaw, Mesh, NodalField};
use crate::Result;

/// Newton/load-stepping controls.
#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Convergence tolerance relative to the load scale of the step.
    pub rel_tol: f64,
    /// Newton iteration cap per load step.
    pub max_iterations: usize,
    /// Number of load increments; `None` selects 1 for the linear law and
    /// 10 for Neo-Hookean.
    pub load_steps: Option<usize>,
    /// Cumulative step-halving budget.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            rel_tol: 1e-8,
            max_iterations: 25,
            load_steps: None,
            max_halvings: 5,
        }
    }
}

/// Solve diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    /// Total Newton iterations across all load steps.
    pub iterations: usize,
    /// Number of converged load increments.
    pub load_steps: usize,
    /// Step halvings consumed.
    pub halvings: usize,
    /// Absolute residual norms of the final load step, per iteration
    /// (before the update), ending with the converged value.
    pub residual_history: Vec<f64>,
    /// Load scale the final step converged against.
    pub final_scale: f64,
}

enum StepFailure {
    Inadmissible(String),
    NonConverged(f64),
    Singular(String),
}

fn newton_step(
    mesh: &Mesh,
    law: &MaterialLaw,
    loads: &Loads,
    dofmap: &DofMap,
    u: &mut NodalField,
    gamma: f64,
    fext_free_norm: f64,
    options: &NewtonOptions,
) -> std::result::Result<(Vec<f64>, f64), StepFailure> {
    let mut history = Vec::new();
    let mut scale = gamma.abs() * fext_free_norm;
    let mut prev_rnorm = f64::INFINITY;
    for iteration in 0..options.max_iterations {
        let (residual, tangent) = match assemble_with_loads(mesh, law, u, loads, gamma) {
            Ok(pair) => pair,
            Err(Error::InadmissibleState(msg)) => return Err(StepFailure::Inadmissible(msg)),
            Err(Error::Geometry(msg)) => return Err(StepFailure::Inadmissible(msg)),
            Err(e) => return Err(StepFailure::Inadmissible(e.to_string())),
        };
        let r_free = dofmap.restrict(residual.as_vector());
        let rnorm = r_free.norm();
        if iteration == 0 {
            // Dirichlet-driven problems have no external force vector; the
            // initial out-of-balance then sets the convergence scale.
            scale = scale.max(rnorm);
        }
        history.push(rnorm);
        // Strain evaluation through F^T F - I cancels to machine precision of
        // the coordinates, so the residual cannot drop below roughly
        // eps * max|K_ii| no matter the load level.
        let mut diag_max = 0.0_f64;
        for (r, c, &v) in tangent.triplet_iter() {
            if r == c {
                diag_max = diag_max.max(v.abs());
            }
        }
        let floor = 16.0 * f64::EPSILON * diag_max;
        // A stagnating residual within 10x the tolerance is likewise the
        // floating-point floor of the linear solve, not divergence.
        let at_floor = rnorm <= floor
            || (iteration >= 2
                && rnorm <= 10.0 * options.rel_tol * scale
                && rnorm >= 0.25 * prev_rnorm);
        if rnorm <= options.rel_tol * scale || at_floor {
            return Ok((history, scale));
        }
        prev_rnorm = rnorm;

        let reduced = dofmap.reduce_matrix(&tangent);
        let csc = CscMatrix::from(&reduced);
        let chol = match CscCholesky::factor(&csc) {
            Ok(c) => c,
            Err(e) => return Err(StepFailure::Singular(format!("{e:?}"))),
        };
        let rhs = DMatrix::from_column_slice(r_free.len(), 1, r_free.as_slice());
        let delta = chol.solve(&rhs);
        let step = -delta.column(0).clone_owned();
        dofmap.scatter_add(&step, u.as_vector_mut());
    }
    Err(StepFailure::NonConverged(
        history.last().copied().unwrap_or(f64::INFINITY),
    ))
}

/// Solves the static problem for the displacement field.
///
/// Returns the converged field together with a [`SolveReport`]. The residual
/// criterion is ||r|| <= tol * ||external force|| per increment, falling back
/// to the initial out-of-balance of the increment when the external force
/// vector vanishes (displacement-driven problems).
pub fn solve_static(
    mesh: &Mesh,
    law: &MaterialLaw,
    loads: &Loads,
    options: &NewtonOptions,
) -> Result<(NodalField, SolveReport)> {
    if mesh.dirichlet.is_empty() {
        return Err(Error::argument(
            "mesh has no Dirichlet boundary; rigid modes unconstrained",
        ));
    }
    let dofmap = DofMap::new(mesh);
    let fext = external_force(mesh, loads)?;
    let fext_free_norm = dofmap.restrict(fext.as_vector()).norm();

    let steps = options
        .load_steps
        .unwrap_or(if law.is_nonlinear() { 10 } else { 1 });
    let initial_dgamma = 1.0 / steps.max(1) as f64;

    let mut u = NodalField::zeros(mesh);
    let mut gamma = 0.0_f64;
    let mut dgamma = initial_dgamma;
    let mut report = SolveReport::default();

    while gamma < 1.0 - 1e-12 {
        let gamma_try = (gamma + dgamma).min(1.0);
        let saved = u.clone();
        for &(dof, value) in dofmap.prescribed() {
            u.as_vector_mut()[dof] = gamma_try * value;
        }
        match newton_step(
            mesh,
            law,
            loads,
            &dofmap,
            &mut u,
            gamma_try,
            fext_free_norm,
            options,
        ) {
            Ok((history, scale)) => {
                gamma = gamma_try;
                report.iterations += history.len();
                report.load_steps += 1;
                report.residual_history = history;
                report.final_scale = scale;
                dgamma = (dgamma * 2.0).min(initial_dgamma);
            }
            Err(failure) => {
                u = saved;
                report.halvings += 1;
                if report.halvings > options.max_halvings {
                    return Err(match failure {
                        StepFailure::Inadmissible(msg) | StepFailure::Singular(msg) => {
                            Error::InadmissibleState(format!(
                                "step halving exhausted at load factor {gamma_try:.4}: {msg}"
                            ))
                        }
                        StepFailure::NonConverged(residual) => Error::Convergence {
                            context: format!(
                                "newton stalled at load factor {gamma_try:.4} after {} halvings",
                                report.halvings - 1
                            ),
                            residual,
                        },
                    });
                }
                dgamma *= 0.5;
            }
        }
    }
    Ok((u, report))
}
