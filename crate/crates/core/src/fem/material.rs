//! Constitutive laws: Saint Venant-Kirchhoff ("linear") and Neo-Hookean.

use nalgebra::Matrix3;

use crate::error::Error;
use crate::fem::kinematics::{DeformationState, StressState};
use crate::Result;

/// Hyperelastic material law.
///
/// The linear law is the standard isotropic quadratic energy in the
/// Green-Lagrange strain, W = lambda/2 tr(E)^2 + mu E:E, with Lame constants
/// derived from (E, nu); at small strains it reduces to classical linear
/// elasticity. The Neo-Hookean law uses
/// W = mu/2 (I1 - 3) - mu ln J + lambda/2 (ln J)^2.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaterialLaw {
    Linear { young: f64, poisson: f64 },
    NeoHookean { lambda: f64, mu: f64 },
}

impl MaterialLaw {
    pub fn linear(young: f64, poisson: f64) -> Result<Self> {
        if young <= 0.0 {
            return Err(Error::argument(format!("young modulus {young} must be > 0")));
        }
        if poisson <= -1.0 || poisson >= 0.5 {
            return Err(Error::argument(format!(
                "poisson ratio {poisson} must lie in (-1, 0.5)"
            )));
        }
        Ok(MaterialLaw::Linear { young, poisson })
    }

    pub fn neo_hookean(lambda: f64, mu: f64) -> Result<Self> {
        if mu <= 0.0 {
            return Err(Error::argument(format!("shear modulus {mu} must be > 0")));
        }
        if lambda < 0.0 {
            return Err(Error::argument(format!("lambda {lambda} must be >= 0")));
        }
        Ok(MaterialLaw::NeoHookean { lambda, mu })
    }

    /// Lame constants (lambda, mu) of either law.
    pub fn lame(&self) -> (f64, f64) {
        match *self {
            MaterialLaw::Linear { young, poisson } => {
                let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
                let mu = young / (2.0 * (1.0 + poisson));
                (lambda, mu)
            }
            MaterialLaw::NeoHookean { lambda, mu } => (lambda, mu),
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        matches!(self, MaterialLaw::NeoHookean { .. })
    }

    fn check_admissible(&self, state: &DeformationState) -> Result<()> {
        if matches!(self, MaterialLaw::NeoHookean { .. }) && state.jdet <= 0.0 {
            return Err(Error::InadmissibleState(format!(
                "det F = {:.3e} <= 0",
                state.jdet
            )));
        }
        Ok(())
    }

    /// Second Piola-Kirchhoff stress S = dW/dE.
    pub(crate) fn pk2(&self, state: &DeformationState) -> Result<Matrix3<f64>> {
        self.check_admissible(state)?;
        let (lambda, mu) = self.lame();
        match self {
            MaterialLaw::Linear { .. } => {
                let e = &state.egl;
                Ok(Matrix3::identity() * (lambda * e.trace()) + 2.0 * mu * e)
            }
            MaterialLaw::NeoHookean { .. } => {
                let cinv = state
                    .c
                    .try_inverse()
                    .ok_or_else(|| Error::InadmissibleState("singular C".into()))?;
                let lnj = state.jdet.ln();
                Ok(mu * (Matrix3::identity() - cinv) + lambda * lnj * cinv)
            }
        }
    }

    /// Applies the fourth-order material tangent to a symmetric matrix:
    /// returns (dS/dE) : A.
    pub(crate) fn tangent_apply(&self, state: &DeformationState, a: &Matrix3<f64>) -> Matrix3<f64> {
        let (lambda, mu) = self.lame();
        match self {
            MaterialLaw::Linear { .. } => {
                Matrix3::identity() * (lambda * a.trace()) + 2.0 * mu * a
            }
            MaterialLaw::NeoHookean { .. } => {
                let cinv = state.c.try_inverse().expect("admissible state");
                let lnj = state.jdet.ln();
                let cinv_a_cinv = cinv * a * cinv;
                let cinv_dot_a = (cinv.transpose().component_mul(a)).sum();
                lambda * cinv_dot_a * cinv + 2.0 * (mu - lambda * lnj) * cinv_a_cinv
            }
        }
    }
}

/// Strain energy density W(state) for the given law.
///
/// Zero at the reference state; fails with an inadmissible-state error when
/// det F <= 0 for the Neo-Hookean law.
pub fn strain_energy(law: &MaterialLaw, state: &DeformationState) -> Result<f64> {
    law.check_admissible(state)?;
    let (lambda, mu) = law.lame();
    match law {
        MaterialLaw::Linear { .. } => {
            let e = &state.egl;
            let tr = e.trace();
            Ok(0.5 * lambda * tr * tr + mu * e.component_mul(e).sum())
        }
        MaterialLaw::NeoHookean { .. } => {
            let lnj = state.jdet.ln();
            Ok(0.5 * mu * (state.i1() - 3.0) - mu * lnj + 0.5 * lambda * lnj * lnj)
        }
    }
}

/// All three stress measures derived from S = dW/dE: P = F S and
/// sigma = P F^T / J.
pub fn pk2_stress(law: &MaterialLaw, state: &DeformationState) -> Result<StressState> {
    let s = law.pk2(state)?;
    Ok(StressState::from_pk2(s, state))
}
