//! Parametric reduced-order finite-element models for camera-based
//! deformation tracking.
//!
//! The crate is organized around a two-stage pipeline:
//!
//! 1. **Offline** ([`fem`], [`mor`]): solve hyperelastic finite-element
//!    problems at high fidelity and compress the parametric response into a
//!    separated (sum of rank-one products) representation.
//! 2. **Online** ([`rom`], [`vision`], [`registration`], [`tracker`]):
//!    register the model into the scene, evaluate the separated solution and
//!    its parameter sensitivities at tracked surface points, and recover the
//!    deformation parameters per video frame by robust Levenberg-Marquardt
//!    minimization of the reprojection error.
//!
//! All operations are deterministic for a fixed seed and produce bit-identical
//! results regardless of thread count (see [`exec`]).

pub mod error;
pub mod exec;
pub mod fem;
pub mod mor;
pub mod registration;
pub mod rom;
pub mod tracker;
pub mod vision;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
