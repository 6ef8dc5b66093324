//! Rigid registration of scene point clouds against the model surface and
//! static/deformable segmentation.

mod cloud;
mod icp;
mod segment;

pub use cloud::PointCloud;
pub use icp::{icp_register, IcpOptions, IcpReport, RegistrationResult};
pub use segment::{segment_points, PointLabel, SegmentOptions};
