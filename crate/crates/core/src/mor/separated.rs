//! Separated (sum of rank-one products) parametric solution container.

use std::path::Path;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fem::Mesh;
use crate::mor::ParameterSpace;
use crate::Result;

/// How a separated solution was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuildMethod {
    Pgd,
    SparsePgd,
    Pod,
}

/// Rank-`n` separated approximation of a parametric nodal field:
///
/// U(X, mu) ~= sum_i F_i(X) * prod_k G_{k,i}(mu_k)
///
/// with nodal space modes `F_i` interpolated by finite elements and scalar
/// parameter modes `G_{k,i}` interpolated piecewise linearly on each axis
/// grid.
///
/// Normalization convention: every space mode has unit Euclidean norm and a
/// positive first nonzero component; for k >= 1 the parameter modes are unit
/// norm with the same sign rule; all amplitude sits in the first parameter's
/// modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatedSolution {
    version: u32,
    method: BuildMethod,
    normalization: String,
    mesh_tag: String,
    node_count: usize,
    space_dim: usize,
    pspace: ParameterSpace,
    space_modes: Vec<Vec<f64>>,
    /// Indexed [parameter axis][mode]; each inner vector has grid length.
    param_modes: Vec<Vec<Vec<f64>>>,
}

impl SeparatedSolution {
    pub fn empty(
        pspace: ParameterSpace,
        node_count: usize,
        space_dim: usize,
        method: BuildMethod,
        mesh_tag: impl Into<String>,
    ) -> Self {
        let n_params = pspace.n_params();
        SeparatedSolution {
            version: 1,
            method,
            normalization: "unit-space-modes, first nonzero component positive, \
amplitude in first parameter modes"
                .to_string(),
            mesh_tag: mesh_tag.into(),
            node_count,
            space_dim,
            pspace,
            space_modes: Vec::new(),
            param_modes: vec![Vec::new(); n_params],
        }
    }

    pub fn rank(&self) -> usize {
        self.space_modes.len()
    }

    pub fn method(&self) -> BuildMethod {
        self.method
    }

    pub fn mesh_tag(&self) -> &str {
        &self.mesh_tag
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn pspace(&self) -> &ParameterSpace {
        &self.pspace
    }

    pub fn space_mode(&self, i: usize) -> &[f64] {
        &self.space_modes[i]
    }

    pub fn param_mode(&self, k: usize, i: usize) -> &[f64] {
        &self.param_modes[k][i]
    }

    /// Appends a rank-one term, applying the normalization convention.
    ///
    /// Zero-amplitude terms are rejected.
    pub fn push_mode(&mut self, space: DVector<f64>, params: Vec<DVector<f64>>) -> Result<()> {
        if space.len() != self.node_count * self.space_dim {
            return Err(Error::argument(format!(
                "space mode length {} != {}",
                space.len(),
                self.node_count * self.space_dim
            )));
        }
        if params.len() != self.pspace.n_params() {
            return Err(Error::argument("one parameter mode required per axis"));
        }
        for (k, p) in params.iter().enumerate() {
            if p.len() != self.pspace.grid_size(k) {
                return Err(Error::argument(format!(
                    "parameter mode {k} length {} != grid size {}",
                    p.len(),
                    self.pspace.grid_size(k)
                )));
            }
        }

        let signed_norm = |v: &DVector<f64>| -> f64 {
            let norm = v.norm();
            let sign = v
                .iter()
                .find(|&&x| x != 0.0)
                .map(|&x| x.signum())
                .unwrap_or(1.0);
            norm * sign
        };

        let mut amplitude = signed_norm(&space);
        if amplitude == 0.0 {
            return Err(Error::argument("zero space mode"));
        }
        let space = space / amplitude;
        let mut params = params;
        for p in params.iter_mut().skip(1) {
            let a = signed_norm(p);
            if a == 0.0 {
                return Err(Error::argument("zero parameter mode"));
            }
            *p /= a;
            amplitude *= a;
        }
        params[0] *= amplitude;

        self.space_modes.push(space.iter().copied().collect());
        for (k, p) in params.into_iter().enumerate() {
            self.param_modes[k].push(p.iter().copied().collect());
        }
        Ok(())
    }

    /// Scalar coefficient of mode `i` at parameter point `mu` (clamped).
    pub fn coefficient(&self, i: usize, mu: &[f64]) -> f64 {
        let mut c = 1.0;
        for k in 0..self.pspace.n_params() {
            c *= self.pspace.interp(k, &self.param_modes[k][i], mu[k]);
        }
        c
    }

    /// All mode coefficients at `mu`.
    pub fn coefficients(&self, mu: &[f64]) -> Vec<f64> {
        (0..self.rank()).map(|i| self.coefficient(i, mu)).collect()
    }

    /// Coefficient derivatives with respect to parameter `k`: only the k-th
    /// factor is differentiated (piecewise-constant slope), the others are
    /// evaluated as usual.
    pub fn coefficient_derivatives(&self, mu: &[f64], k: usize) -> Result<Vec<f64>> {
        if k >= self.pspace.n_params() {
            return Err(Error::argument(format!(
                "parameter index {k} out of range ({} axes)",
                self.pspace.n_params()
            )));
        }
        Ok((0..self.rank())
            .map(|i| {
                let mut c = 1.0;
                for kk in 0..self.pspace.n_params() {
                    let values = &self.param_modes[kk][i];
                    c *= if kk == k {
                        self.pspace.interp_derivative(kk, values, mu[kk])
                    } else {
                        self.pspace.interp(kk, values, mu[kk])
                    };
                }
                c
            })
            .collect())
    }

    /// 3D displacement of a mesh node given precomputed coefficients.
    pub fn node_displacement(&self, node: usize, coefficients: &[f64]) -> Vector3<f64> {
        let mut u = Vector3::zeros();
        for (i, &c) in coefficients.iter().enumerate() {
            let mode = &self.space_modes[i];
            for d in 0..self.space_dim {
                u[d] += c * mode[node * self.space_dim + d];
            }
        }
        u
    }

    /// Full nodal field at `mu` as a dof vector (rank x dofs cost).
    pub fn evaluate_at_nodes(&self, mu: &[f64]) -> DVector<f64> {
        let coeffs = self.coefficients(mu);
        let mut out = DVector::zeros(self.node_count * self.space_dim);
        for (i, &c) in coeffs.iter().enumerate() {
            for (d, &m) in self.space_modes[i].iter().enumerate() {
                out[d] += c * m;
            }
        }
        out
    }

    /// First `rank` terms as a new solution.
    pub fn truncated(&self, rank: usize) -> Self {
        let r = rank.min(self.rank());
        let mut out = self.clone();
        out.space_modes.truncate(r);
        for pm in &mut out.param_modes {
            pm.truncate(r);
        }
        out
    }

    /// Checks that this solution was built over the same discretization.
    pub fn compatible_with(&self, mesh: &Mesh) -> Result<()> {
        if mesh.node_count() != self.node_count || mesh.dim() != self.space_dim {
            return Err(Error::argument(format!(
                "solution built for {} nodes / dim {}, mesh has {} / {}",
                self.node_count,
                self.space_dim,
                mesh.node_count(),
                mesh.dim()
            )));
        }
        Ok(())
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self).expect("solution serialization");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let sol: SeparatedSolution = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("solution file: {e}")))?;
        if sol.version != 1 {
            return Err(Error::Parse(format!(
                "unsupported solution file version {}",
                sol.version
            )));
        }
        // structural invariants
        let r = sol.space_modes.len();
        if sol.param_modes.len() != sol.pspace.n_params()
            || sol.param_modes.iter().any(|pm| pm.len() != r)
        {
            return Err(Error::Parse("inconsistent mode counts".into()));
        }
        for m in &sol.space_modes {
            if m.len() != sol.node_count * sol.space_dim {
                return Err(Error::Parse("space mode length mismatch".into()));
            }
        }
        for (k, pm) in sol.param_modes.iter().enumerate() {
            if pm.iter().any(|p| p.len() != sol.pspace.grid_size(k)) {
                return Err(Error::Parse("parameter mode length mismatch".into()));
            }
        }
        Ok(sol)
    }
}
