//! Static/deformable segmentation of scene points against the registered
//! model surface.

use nalgebra::Point3;
use rstar::{primitives::GeomWithData, RTree};

use crate::registration::PointCloud;
use crate::vision::RigidTransform;

/// Scene-point role after registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLabel {
    /// Background geometry; usable for camera localization.
    Static,
    /// On the registered object; carries deformation information.
    Deformable,
    /// Inside the buffer band; excluded from both roles.
    Unresolved,
}

#[derive(Debug, Clone)]
pub struct SegmentOptions {
    /// Distance threshold to the registered surface for the deformable label.
    pub threshold: f64,
    /// Points between threshold and buffer * threshold stay unresolved.
    pub buffer_factor: f64,
}

impl SegmentOptions {
    pub fn with_threshold(threshold: f64) -> Self {
        SegmentOptions {
            threshold,
            buffer_factor: 2.0,
        }
    }
}

/// Labels each cloud point by its distance to the registered model samples.
///
/// Invariant under re-indexing of the cloud; empty classes are legal.
pub fn segment_points(
    cloud: &PointCloud,
    model: &[Point3<f64>],
    w_t_o: &RigidTransform,
    options: &SegmentOptions,
) -> Vec<PointLabel> {
    let tree = RTree::bulk_load(
        model
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let q = w_t_o.transform_point(p);
                GeomWithData::new([q.x, q.y, q.z], i)
            })
            .collect(),
    );
    cloud
        .points
        .iter()
        .map(|p| {
            let d2 = tree
                .nearest_neighbor_iter_with_distance_2([p.x, p.y, p.z])
                .next()
                .map(|(_, d2)| d2)
                .unwrap_or(f64::INFINITY);
            let d = d2.sqrt();
            if d <= options.threshold {
                PointLabel::Deformable
            } else if d <= options.buffer_factor * options.threshold {
                PointLabel::Unresolved
            } else {
                PointLabel::Static
            }
        })
        .collect()
}
