//! Nodal vector fields (displacements, forces) over a mesh.

use nalgebra::{DVector, Vector3};

use crate::error::Error;
use crate::fem::Mesh;
use crate::Result;

/// Per-node vector field; length = node count x spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: DVector<f64>,
    dim: usize,
}

impl NodalField {
    pub fn zeros(mesh: &Mesh) -> Self {
        NodalField {
            values: DVector::zeros(mesh.dof_count()),
            dim: mesh.dim(),
        }
    }

    /// Wraps a raw dof vector; checks the length invariant.
    pub fn from_vector(mesh: &Mesh, values: DVector<f64>) -> Result<Self> {
        if values.len() != mesh.dof_count() {
            return Err(Error::argument(format!(
                "field length {} != {} dofs",
                values.len(),
                mesh.dof_count()
            )));
        }
        Ok(NodalField {
            values,
            dim: mesh.dim(),
        })
    }

    /// Builds a field from a per-node closure over reference coordinates.
    pub fn from_fn<F: Fn(&nalgebra::Point3<f64>) -> Vector3<f64>>(mesh: &Mesh, f: F) -> Self {
        let mut field = Self::zeros(mesh);
        for n in 0..mesh.node_count() {
            field.set_node(n, &f(&mesh.node(n)));
        }
        field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    /// Nodal vector as 3D (z = 0 in 2D).
    pub fn node(&self, n: usize) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        for c in 0..self.dim {
            v[c] = self.values[n * self.dim + c];
        }
        v
    }

    /// Sets the nodal vector (extra components ignored in 2D).
    pub fn set_node(&mut self, n: usize, v: &Vector3<f64>) {
        for c in 0..self.dim {
            self.values[n * self.dim + c] = v[c];
        }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_vector_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    /// Largest nodal vector magnitude.
    pub fn max_node_norm(&self) -> f64 {
        (0..self.node_count())
            .map(|n| self.node(n).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for NodalField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}
