//! Proper rigid transforms between the object, world and camera frames.

use nalgebra::{Matrix3, Point3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Which frame pair a transform relates (descriptive only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FrameTag {
    /// w_T_o: object frame to world frame.
    WorldFromObject,
    /// w_T_c: camera frame to world frame.
    WorldFromCamera,
    #[default]
    Generic,
}

/// Rotation + translation with a validated proper-orthogonal rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    pub tag: FrameTag,
}

impl RigidTransform {
    /// Validates R^T R = I (1e-10) and det R = +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if ortho > 1e-10 {
            return Err(Error::argument(format!(
                "rotation not orthogonal (deviation {ortho:.3e})"
            )));
        }
        if rotation.determinant() < 0.0 {
            return Err(Error::argument("rotation is a reflection (det < 0)"));
        }
        Ok(RigidTransform {
            rotation,
            translation,
            tag: FrameTag::Generic,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            tag: FrameTag::Generic,
        }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(*axis),
            angle,
        )
        .into_inner();
        RigidTransform {
            rotation,
            translation,
            tag: FrameTag::Generic,
        }
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
            tag: FrameTag::Generic,
        }
    }

    pub fn with_tag(mut self, tag: FrameTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(
            self.rotation,
        ))
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
            tag: FrameTag::Generic,
        }
    }

    /// self * other (apply `other` first).
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
            tag: FrameTag::Generic,
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Rotates a vector (derivatives transform without translation).
    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Rotation angle (radians) between two transforms plus translation gap.
    pub fn difference(&self, other: &RigidTransform) -> (f64, f64) {
        let rel = self.rotation.transpose() * other.rotation;
        let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        (c.acos(), (self.translation - other.translation).norm())
    }
}

/// Serialized form: unit quaternion (w, x, y, z) + translation.
#[derive(Serialize, Deserialize)]
struct TransformRecord {
    quaternion: [f64; 4],
    translation: [f64; 3],
    #[serde(default)]
    tag: FrameTag,
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let q = self.to_quaternion();
        TransformRecord {
            quaternion: [q.w, q.i, q.j, q.k],
            translation: [self.translation.x, self.translation.y, self.translation.z],
            tag: self.tag,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = TransformRecord::deserialize(d)?;
        let [w, x, y, z] = rec.quaternion;
        let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
        Ok(RigidTransform::from_quaternion(
            &q,
            Vector3::from_row_slice(&rec.translation),
        )
        .with_tag(rec.tag))
    }
}
