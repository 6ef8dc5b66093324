//! Finite-strain kinematics: deformation gradient and strain measures.

use nalgebra::{Matrix3, Vector3};

use crate::fem::{Mesh, NodalField};
use crate::Result;

/// Deformation measures at a material point.
///
/// `F` is the deformation gradient of the map X -> X' = X + U(X); `C = F^T F`
/// is the right Cauchy-Green tensor, `egl = (C - I)/2` the Green-Lagrange
/// strain and `jdet = det F`.
#[derive(Debug, Clone, Copy)]
pub struct DeformationState {
    pub f: Matrix3<f64>,
    pub c: Matrix3<f64>,
    pub egl: Matrix3<f64>,
    pub jdet: f64,
}

impl DeformationState {
    /// Derives all measures from a deformation gradient.
    pub fn from_deformation_gradient(f: Matrix3<f64>) -> Self {
        let c = f.transpose() * f;
        let egl = green_lagrange(&f);
        DeformationState {
            f,
            c,
            egl,
            jdet: f.determinant(),
        }
    }

    /// First invariant of C: I1 = tr(C) = sum of squared principal stretches.
    pub fn i1(&self) -> f64 {
        self.c.trace()
    }

    /// Principal stretches (square roots of the eigenvalues of C), sorted
    /// in decreasing order.
    pub fn principal_stretches(&self) -> Vector3<f64> {
        let mut ev: Vec<f64> = self
            .c
            .symmetric_eigenvalues()
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Vector3::new(ev[0], ev[1], ev[2])
    }
}

/// Stress measures at a material point: second Piola-Kirchhoff `S`, first
/// Piola-Kirchhoff `P = F S` and Cauchy `sigma = P F^T / J`.
#[derive(Debug, Clone, Copy)]
pub struct StressState {
    pub s: Matrix3<f64>,
    pub p: Matrix3<f64>,
    pub sigma: Matrix3<f64>,
}

impl StressState {
    pub(crate) fn from_pk2(s: Matrix3<f64>, state: &DeformationState) -> Self {
        let p = state.f * s;
        let sigma = p * state.f.transpose() / state.jdet;
        StressState { s, p, sigma }
    }

    /// Von Mises equivalent of the Cauchy stress.
    pub fn von_mises(&self) -> f64 {
        let s = &self.sigma;
        let dev = s - Matrix3::identity() * (s.trace() / 3.0);
        (1.5 * dev.component_mul(&dev).sum()).sqrt()
    }
}

/// Green-Lagrange strain E = (F^T F - I) / 2.
///
/// Vanishes for any rigid motion; equals the symmetric displacement-gradient
/// expression (grad U + grad U^T + grad U^T grad U) / 2 when F = I + grad U.
pub fn green_lagrange(f: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (f.transpose() * f - Matrix3::identity())
}

/// Evaluates the deformation gradient of a nodal displacement field at the
/// natural coordinates of an element, via shape-function gradients.
///
/// In 2D (plane strain) the out-of-plane block is identity.
pub fn deformation_gradient(
    mesh: &Mesh,
    u: &NodalField,
    element: usize,
    natural: &Vector3<f64>,
) -> Result<DeformationState> {
    let (grads, _detj) = mesh.reference_gradients(element, natural)?;
    let mut f = Matrix3::identity();
    for (a, &n) in mesh.element_nodes(element).iter().enumerate() {
        let ua = u.node(n);
        // F += u_a (x) grad N_a
        for i in 0..3 {
            for j in 0..3 {
                f[(i, j)] += ua[i] * grads[a][j];
            }
        }
    }
    Ok(DeformationState::from_deformation_gradient(f))
}
