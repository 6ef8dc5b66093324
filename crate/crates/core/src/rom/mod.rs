//! Online evaluation of separated solutions at arbitrary material points.
//!
//! Scene points are bound once to the mesh ([`bind_points`]); displacement
//! and parameter-sensitivity queries then cost rank x points with no
//! finite-element solve.

mod binding;
mod evaluate;

pub use binding::{bind_points, BindOptions, BoundPoint, PointBinding};
pub use evaluate::{evaluate_displacement, evaluate_sensitivity, Evaluation, EvaluationQuery};
