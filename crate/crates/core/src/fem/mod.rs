//! Finite-element kinematics, constitutive laws and a Newton static solver.
//!
//! This module is the high-fidelity oracle of the crate: every reduced-order
//! result is validated against solutions produced here. It implements total
//! Lagrangian quad4 (plane strain) and hex8 elements with full 2-point Gauss
//! quadrature, Saint Venant-Kirchhoff ("linear") and Neo-Hookean laws, and
//! incremental load stepping with step halving for the nonlinear law.

mod assembly;
mod field;
mod kinematics;
mod material;
mod mesh;
mod solve;

pub use assembly::{assemble, external_force, linear_stiffness, DofMap, Loads};
pub use field::NodalField;
pub use kinematics::{deformation_gradient, green_lagrange, DeformationState, StressState};
pub use material::{pk2_stress, strain_energy, MaterialLaw};
pub use mesh::{ElementKind, Mesh, NeumannFacet, SurfaceFacet};
pub use solve::{solve_static, NewtonOptions, SolveReport};
