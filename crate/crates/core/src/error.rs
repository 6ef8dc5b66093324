//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the offline builders and the online tracking pipeline.
#[derive(Error, Debug)]
pub enum Error {
    /// Invalid argument or inconsistent input sizes.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Degenerate reference geometry (non-positive element Jacobian).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A deformation state with det(F) <= 0 was reached.
    #[error("inadmissible state: {0}")]
    InadmissibleState(String),

    /// Newton iteration failed to converge.
    #[error("solver did not converge: {context} (last residual {residual:.3e})")]
    Convergence { context: String, residual: f64 },

    /// PGD fixed-point alternation failed to converge within the sweep cap.
    #[error("enrichment stalled: sweep residual {sweep_residual:.3e} after {sweeps} sweeps")]
    Enrichment { sweeps: usize, sweep_residual: f64 },

    /// A separated approximation cannot reach the requested tolerance.
    #[error("separation needs more terms: achieved error {achieved:.3e} > tolerance {tolerance:.3e} with {terms} terms")]
    ApproximationTolerance {
        terms: usize,
        achieved: f64,
        tolerance: f64,
    },

    /// A query point could not be bound to the mesh.
    #[error("point binding failed: {0}")]
    Binding(String),

    /// Point at or behind the camera plane.
    #[error("point behind camera: Z_C = {z_c:.3e}")]
    BehindCamera { z_c: f64 },

    /// Rigid registration did not reach the acceptance residual; carries the
    /// best attempt.
    #[error("registration failed: best rms {best_rms:.3e} above threshold {threshold:.3e}")]
    RegistrationFailure {
        best_rms: f64,
        threshold: f64,
        best: Box<crate::vision::RigidTransform>,
    },

    /// No usable measurement remained in a frame.
    #[error("frame unusable: {0}")]
    FrameUnusable(String),

    /// Scenario construction or synthesis failed.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// File format violation.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
