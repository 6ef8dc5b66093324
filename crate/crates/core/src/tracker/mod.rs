//! Per-frame deformation-parameter estimation by robust Levenberg-Marquardt
//! minimization of the reprojection error, plus sequence-level tracking with
//! slow geometric parameters.

mod estimate;
mod lm;
mod residuals;
mod sequence;

pub use estimate::{estimate_frame, FrameEstimate, TrackerConfig};
pub use lm::lm_iterate;
pub use residuals::{robust_residuals, ResidualData};
pub use sequence::{track_sequence, FrameStatus, TrackOutput};
