//! Pinhole camera geometry and synthetic observation sequences.

mod camera;
mod synth;
mod transform;

pub use camera::{
    back_project, camera_frame_point, image_jacobian, project_point, project_sensitivity,
    CameraModel, EPS_DEPTH,
};
pub use synth::{
    sample_surface_points, synthesize_sequence, write_observations_csv, Measurement,
    ObservationFrame, SurfaceSample,
    SynthesisConfig, SyntheticSequence,
};
pub use transform::{FrameTag, RigidTransform};
