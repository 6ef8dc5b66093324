//! Mesh container, isoparametric shape functions and quadrature.
//!
//! Two element families are supported: 4-node quadrilaterals in 2D (plane
//! strain, nodes stored with z = 0) and 8-node hexahedra in 3D, both with
//! bilinear/trilinear shape functions and full Gauss quadrature (2 points per
//! direction). All geometry lives in the reference (undeformed) configuration.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Supported element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    /// 4-node quadrilateral, 2D plane strain.
    #[serde(rename = "quad4")]
    Quad4,
    /// 8-node hexahedron, 3D.
    #[serde(rename = "hex8")]
    Hex8,
}

impl ElementKind {
    /// Spatial dimension (2 or 3).
    pub fn dim(&self) -> usize {
        match self {
            ElementKind::Quad4 => 2,
            ElementKind::Hex8 => 3,
        }
    }

    /// Nodes per element.
    pub fn nodes_per_element(&self) -> usize {
        match self {
            ElementKind::Quad4 => 4,
            ElementKind::Hex8 => 8,
        }
    }

    /// Natural coordinates of corner `a`.
    pub fn corner_natural(&self, a: usize) -> Vector3<f64> {
        match self {
            ElementKind::Quad4 => {
                const C: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
                Vector3::new(C[a][0], C[a][1], 0.0)
            }
            ElementKind::Hex8 => {
                const C: [[f64; 3]; 8] = [
                    [-1.0, -1.0, -1.0],
                    [1.0, -1.0, -1.0],
                    [1.0, 1.0, -1.0],
                    [-1.0, 1.0, -1.0],
                    [-1.0, -1.0, 1.0],
                    [1.0, -1.0, 1.0],
                    [1.0, 1.0, 1.0],
                    [-1.0, 1.0, 1.0],
                ];
                Vector3::from_row_slice(&C[a])
            }
        }
    }

    /// Shape function values at natural coordinates.
    pub fn shape(&self, xi: &Vector3<f64>) -> Vec<f64> {
        let npe = self.nodes_per_element();
        (0..npe)
            .map(|a| {
                let c = self.corner_natural(a);
                match self {
                    ElementKind::Quad4 => 0.25 * (1.0 + c.x * xi.x) * (1.0 + c.y * xi.y),
                    ElementKind::Hex8 => {
                        0.125 * (1.0 + c.x * xi.x) * (1.0 + c.y * xi.y) * (1.0 + c.z * xi.z)
                    }
                }
            })
            .collect()
    }

    /// Shape function gradients with respect to natural coordinates.
    ///
    /// For quad4 the third component is zero.
    pub fn shape_grad_natural(&self, xi: &Vector3<f64>) -> Vec<Vector3<f64>> {
        let npe = self.nodes_per_element();
        (0..npe)
            .map(|a| {
                let c = self.corner_natural(a);
                match self {
                    ElementKind::Quad4 => Vector3::new(
                        0.25 * c.x * (1.0 + c.y * xi.y),
                        0.25 * c.y * (1.0 + c.x * xi.x),
                        0.0,
                    ),
                    ElementKind::Hex8 => Vector3::new(
                        0.125 * c.x * (1.0 + c.y * xi.y) * (1.0 + c.z * xi.z),
                        0.125 * c.y * (1.0 + c.x * xi.x) * (1.0 + c.z * xi.z),
                        0.125 * c.z * (1.0 + c.x * xi.x) * (1.0 + c.y * xi.y),
                    ),
                }
            })
            .collect()
    }

    /// Full Gauss quadrature rule (2 points per direction): (point, weight).
    pub fn gauss_points(&self) -> Vec<(Vector3<f64>, f64)> {
        let mut pts = Vec::new();
        match self {
            ElementKind::Quad4 => {
                for &gx in &GAUSS_1D {
                    for &gy in &GAUSS_1D {
                        pts.push((Vector3::new(gx, gy, 0.0), 1.0));
                    }
                }
            }
            ElementKind::Hex8 => {
                for &gx in &GAUSS_1D {
                    for &gy in &GAUSS_1D {
                        for &gz in &GAUSS_1D {
                            pts.push((Vector3::new(gx, gy, gz), 1.0));
                        }
                    }
                }
            }
        }
        pts
    }

    /// Boundary facets in local node indices, oriented so the facet normal
    /// points out of the reference element.
    pub fn local_faces(&self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Quad4 => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            ElementKind::Hex8 => &[
                &[0, 3, 2, 1],
                &[4, 5, 6, 7],
                &[0, 1, 5, 4],
                &[1, 2, 6, 5],
                &[2, 3, 7, 6],
                &[3, 0, 4, 7],
            ],
        }
    }
}

/// Traction boundary facet: node indices (an edge in 2D, a quad face in 3D)
/// plus the traction vector applied on it (Pa).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeumannFacet {
    pub nodes: Vec<usize>,
    pub traction: [f64; 3],
}

/// A boundary facet with its owning element, as extracted from the mesh.
#[derive(Debug, Clone)]
pub struct SurfaceFacet {
    /// Global node indices, outward-oriented.
    pub nodes: Vec<usize>,
    /// Owning element index.
    pub element: usize,
    /// Local face index within the owning element.
    pub local_face: usize,
}

/// Finite-element discretization of the reference domain.
///
/// Node coordinates are stored as 3D points; quad4 meshes keep z = 0 and use
/// only the first two displacement components. Units are meters and Pascals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Vec<usize>>,
    pub element_kind: ElementKind,
    /// Prescribed displacements on the Dirichlet boundary (node -> value).
    #[serde(default)]
    pub dirichlet: BTreeMap<usize, [f64; 3]>,
    /// Traction facets on the Neumann boundary.
    #[serde(default)]
    pub neumann: Vec<NeumannFacet>,
}

impl Mesh {
    /// Builds a mesh and validates element connectivity and reference
    /// geometry (positive Jacobian at every quadrature point).
    pub fn new(
        nodes: Vec<[f64; 3]>,
        elements: Vec<Vec<usize>>,
        element_kind: ElementKind,
    ) -> Result<Self> {
        let mesh = Mesh {
            nodes,
            elements,
            element_kind,
            dirichlet: BTreeMap::new(),
            neumann: Vec::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks connectivity ranges and reference Jacobians.
    pub fn validate(&self) -> Result<()> {
        let npe = self.element_kind.nodes_per_element();
        for (e, conn) in self.elements.iter().enumerate() {
            if conn.len() != npe {
                return Err(Error::Geometry(format!(
                    "element {e} has {} nodes, expected {npe}",
                    conn.len()
                )));
            }
            for &n in conn {
                if n >= self.nodes.len() {
                    return Err(Error::Geometry(format!(
                        "element {e} references node {n} out of range"
                    )));
                }
            }
            for (xi, _) in self.element_kind.gauss_points() {
                self.reference_gradients(e, &xi)?;
            }
        }
        for &n in self.dirichlet.keys() {
            if n >= self.nodes.len() {
                return Err(Error::Geometry(format!("dirichlet node {n} out of range")));
            }
        }
        for facet in &self.neumann {
            for &n in &facet.nodes {
                if n >= self.nodes.len() {
                    return Err(Error::Geometry(format!("neumann node {n} out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.element_kind.dim()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total displacement degrees of freedom.
    pub fn dof_count(&self) -> usize {
        self.nodes.len() * self.dim()
    }

    /// Global dof index of (node, component).
    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.dim() + comp
    }

    pub fn node(&self, n: usize) -> Point3<f64> {
        Point3::from(Vector3::from_row_slice(&self.nodes[n]))
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    /// Shape-function gradients with respect to reference coordinates and the
    /// reference Jacobian determinant at natural coordinates `xi`.
    ///
    /// Fails with a geometry error when the reference map is singular or
    /// inverted (det <= 0).
    pub fn reference_gradients(
        &self,
        element: usize,
        xi: &Vector3<f64>,
    ) -> Result<(Vec<Vector3<f64>>, f64)> {
        let conn = &self.elements[element];
        let dnat = self.element_kind.shape_grad_natural(xi);
        match self.element_kind {
            ElementKind::Quad4 => {
                // J_ij = d X_i / d xi_j, 2x2 block.
                let mut jac = Matrix2::<f64>::zeros();
                for (a, &n) in conn.iter().enumerate() {
                    let x = self.node(n);
                    jac[(0, 0)] += x.x * dnat[a].x;
                    jac[(0, 1)] += x.x * dnat[a].y;
                    jac[(1, 0)] += x.y * dnat[a].x;
                    jac[(1, 1)] += x.y * dnat[a].y;
                }
                let det = jac.determinant();
                if det <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "element {element}: reference Jacobian {det:.3e} <= 0"
                    )));
                }
                let inv = jac.try_inverse().expect("det > 0 checked above");
                let grads = dnat
                    .iter()
                    .map(|g| {
                        // dN/dX = J^{-T} dN/dxi
                        Vector3::new(
                            inv[(0, 0)] * g.x + inv[(1, 0)] * g.y,
                            inv[(0, 1)] * g.x + inv[(1, 1)] * g.y,
                            0.0,
                        )
                    })
                    .collect();
                Ok((grads, det))
            }
            ElementKind::Hex8 => {
                let mut jac = Matrix3::<f64>::zeros();
                for (a, &n) in conn.iter().enumerate() {
                    let x = self.node(n);
                    for i in 0..3 {
                        for j in 0..3 {
                            jac[(i, j)] += x[i] * dnat[a][j];
                        }
                    }
                }
                let det = jac.determinant();
                if det <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "element {element}: reference Jacobian {det:.3e} <= 0"
                    )));
                }
                let inv = jac.try_inverse().expect("det > 0 checked above");
                let grads = dnat.iter().map(|g| inv.transpose() * g).collect();
                Ok((grads, det))
            }
        }
    }

    /// Interpolates reference position at natural coordinates of an element.
    pub fn interpolate_position(&self, element: usize, xi: &Vector3<f64>) -> Point3<f64> {
        let shape = self.element_kind.shape(xi);
        let mut x = Vector3::zeros();
        for (a, &n) in self.elements[element].iter().enumerate() {
            x += shape[a] * self.node(n).coords;
        }
        Point3::from(x)
    }

    /// Axis-aligned bounding box of the nodes.
    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in &self.nodes {
            for i in 0..3 {
                lo[i] = lo[i].min(n[i]);
                hi[i] = hi[i].max(n[i]);
            }
        }
        (lo, hi)
    }

    /// Diagonal length of the bounding box.
    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Boundary facets: element faces that appear exactly once in the mesh,
    /// outward-oriented (edges in 2D, quad faces in 3D).
    pub fn surface_facets(&self) -> Vec<SurfaceFacet> {
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for conn in &self.elements {
            for face in self.element_kind.local_faces() {
                let mut key: Vec<usize> = face.iter().map(|&l| conn[l]).collect();
                key.sort_unstable();
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut facets = Vec::new();
        for (e, conn) in self.elements.iter().enumerate() {
            for (lf, face) in self.element_kind.local_faces().iter().enumerate() {
                let nodes: Vec<usize> = face.iter().map(|&l| conn[l]).collect();
                let mut key = nodes.clone();
                key.sort_unstable();
                if count[&key] == 1 {
                    facets.push(SurfaceFacet {
                        nodes,
                        element: e,
                        local_face: lf,
                    });
                }
            }
        }
        facets
    }

    /// Element natural coordinates of a point on a local face, given facet
    /// parameters in [-1, 1] (only the first parameter is used in 2D).
    pub fn face_natural_coords(&self, local_face: usize, s: f64, t: f64) -> Vector3<f64> {
        let face = self.element_kind.local_faces()[local_face];
        match self.element_kind {
            ElementKind::Quad4 => {
                let a = self.element_kind.corner_natural(face[0]);
                let b = self.element_kind.corner_natural(face[1]);
                0.5 * (1.0 - s) * a + 0.5 * (1.0 + s) * b
            }
            ElementKind::Hex8 => {
                let w = [
                    0.25 * (1.0 - s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 + t),
                    0.25 * (1.0 - s) * (1.0 + t),
                ];
                let mut xi = Vector3::zeros();
                for (k, &l) in face.iter().enumerate() {
                    xi += w[k] * self.element_kind.corner_natural(l);
                }
                xi
            }
        }
    }

    /// Outward normal (unit) and area of a surface facet, evaluated at its
    /// parametric center from the reference geometry.
    pub fn facet_normal_area(&self, facet: &SurfaceFacet) -> (Vector3<f64>, f64) {
        match self.element_kind {
            ElementKind::Quad4 => {
                let a = self.node(facet.nodes[0]);
                let b = self.node(facet.nodes[1]);
                let t = b - a;
                let len = t.norm();
                // outward in-plane normal for counter-clockwise elements
                (Vector3::new(t.y, -t.x, 0.0) / len, len)
            }
            ElementKind::Hex8 => {
                let p: Vec<Vector3<f64>> =
                    facet.nodes.iter().map(|&n| self.node(n).coords).collect();
                let d1 = p[2] - p[0];
                let d2 = p[3] - p[1];
                let cross = d1.cross(&d2);
                // area of a bilinear quad = |d1 x d2| / 2 for planar facets
                (cross.normalize(), 0.5 * cross.norm())
            }
        }
    }

    /// Node indices satisfying a coordinate predicate.
    pub fn nodes_where<F: Fn(&Point3<f64>) -> bool>(&self, pred: F) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&n| pred(&self.node(n)))
            .collect()
    }

    /// Prescribes zero displacement on the given nodes.
    pub fn fix_nodes(&mut self, nodes: &[usize]) {
        for &n in nodes {
            self.dirichlet.insert(n, [0.0; 3]);
        }
    }

    /// Structured quad4 grid on [0, lx] x [0, ly] with nx x ny elements.
    pub fn rect_quad_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64, 0.0]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Mesh::new(nodes, elements, ElementKind::Quad4)
    }

    /// Structured hex8 grid on [0, lx] x [0, ly] x [0, lz].
    pub fn hex_block_grid(
        nx: usize,
        ny: usize,
        nz: usize,
        lx: f64,
        ly: f64,
        lz: f64,
    ) -> Result<Self> {
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push([
                        lx * i as f64 / nx as f64,
                        ly * j as f64 / ny as f64,
                        lz * k as f64 / nz as f64,
                    ]);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    elements.push(vec![
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ]);
                }
            }
        }
        Mesh::new(nodes, elements, ElementKind::Hex8)
    }

    /// Reads a mesh from its JSON file format.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mesh: Mesh =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("mesh file: {e}")))?;
        mesh.validate()?;
        Ok(mesh)
    }

    /// Writes the mesh to its JSON file format.
    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("mesh serialization");
        std::fs::write(path, text)?;
        Ok(())
    }
}
