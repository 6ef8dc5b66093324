//! Global assembly of internal forces, consistent tangents and external loads.
//!
//! Two independent routes exist on purpose: [`assemble`] linearizes the total
//! Lagrangian weak form (material + geometric stiffness) for either law, while
//! [`linear_stiffness`] builds the classical small-strain stiffness matrix
//! from engineering B-matrices. The latter drives the separated parametric
//! builder and doubles as a cross-check of the former at u = 0.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use nalgebra_sparse::CooMatrix;

use crate::error::Error;
use crate::exec;
use crate::fem::kinematics::DeformationState;
use crate::fem::{ElementKind, MaterialLaw, Mesh, NodalField};
use crate::Result;

/// External load specification: body force density plus concentrated nodal
/// forces. Boundary tractions live on the mesh itself ([`Mesh::neumann`]).
#[derive(Debug, Clone, Default)]
pub struct Loads {
    /// Body force per unit reference volume (N/m^3).
    pub body_force: Vector3<f64>,
    /// Concentrated forces (node index, force vector in N).
    pub nodal_forces: Vec<(usize, Vector3<f64>)>,
}

impl Loads {
    pub fn none() -> Self {
        Loads::default()
    }

    pub fn nodal(forces: Vec<(usize, Vector3<f64>)>) -> Self {
        Loads {
            body_force: Vector3::zeros(),
            nodal_forces: forces,
        }
    }
}

/// Free/prescribed dof bookkeeping for Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct DofMap {
    free: Vec<usize>,
    position: Vec<Option<usize>>,
    prescribed: Vec<(usize, f64)>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let n = mesh.dof_count();
        let mut position = vec![None; n];
        let mut prescribed = Vec::new();
        for (&node, value) in &mesh.dirichlet {
            for c in 0..dim {
                prescribed.push((mesh.dof(node, c), value[c]));
            }
        }
        for &(dof, _) in &prescribed {
            position[dof] = Some(usize::MAX); // marked, re-indexed below
        }
        let mut free = Vec::new();
        for dof in 0..n {
            if position[dof].is_none() {
                position[dof] = Some(free.len());
                free.push(dof);
            } else {
                position[dof] = None;
            }
        }
        DofMap {
            free,
            position,
            prescribed,
        }
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Prescribed (dof, value) pairs at full load.
    pub fn prescribed(&self) -> &[(usize, f64)] {
        &self.prescribed
    }

    /// Extracts the free components of a full dof vector.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&d| full[d]))
    }

    /// Adds free components back into a full dof vector.
    pub fn scatter_add(&self, free: &DVector<f64>, full: &mut DVector<f64>) {
        for (k, &d) in self.free.iter().enumerate() {
            full[d] += free[k];
        }
    }

    /// Reduces a full COO matrix to the free-free block.
    pub fn reduce_matrix(&self, full: &CooMatrix<f64>) -> CooMatrix<f64> {
        let mut reduced = CooMatrix::new(self.free.len(), self.free.len());
        for (r, c, &v) in full.triplet_iter() {
            if let (Some(ri), Some(ci)) = (self.position[r], self.position[c]) {
                reduced.push(ri, ci, v);
            }
        }
        reduced
    }
}

struct ElementContribution {
    force: Vec<f64>,
    stiffness: DMatrix<f64>,
}

fn element_internal(
    mesh: &Mesh,
    law: &MaterialLaw,
    u: &NodalField,
    element: usize,
) -> Result<ElementContribution> {
    let conn = mesh.element_nodes(element);
    let npe = conn.len();
    let mut force = vec![0.0; 3 * npe];
    let mut k = DMatrix::<f64>::zeros(3 * npe, 3 * npe);
    let u_nodes: Vec<Vector3<f64>> = conn.iter().map(|&n| u.node(n)).collect();

    for (xi, w) in mesh.element_kind.gauss_points() {
        let (grads, detj) = mesh.reference_gradients(element, &xi)?;
        let mut f = Matrix3::identity();
        for a in 0..npe {
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += u_nodes[a][i] * grads[a][j];
                }
            }
        }
        let state = DeformationState::from_deformation_gradient(f);
        if law.is_nonlinear() && state.jdet <= 0.0 {
            return Err(Error::InadmissibleState(format!(
                "element {element}: det F = {:.3e} <= 0 during assembly",
                state.jdet
            )));
        }
        let s = law.pk2(&state)?;
        let scale = w * detj;

        // internal force: P grad(N_a) with P = F S
        let p = f * s;
        for a in 0..npe {
            let fa = p * grads[a] * scale;
            for i in 0..3 {
                force[3 * a + i] += fa[i];
            }
        }

        // consistent tangent: geometric + material parts
        let f_rows: [Vector3<f64>; 3] = [
            f.row(0).transpose(),
            f.row(1).transpose(),
            f.row(2).transpose(),
        ];
        let s_g: Vec<Vector3<f64>> = grads.iter().map(|g| s * g).collect();
        for b in 0..npe {
            for j in 0..3 {
                // dE/du_bj = sym(grad N_b (x) row_j(F))
                let mut de = Matrix3::zeros();
                for m in 0..3 {
                    for n in 0..3 {
                        de[(m, n)] =
                            0.5 * (grads[b][m] * f_rows[j][n] + f_rows[j][m] * grads[b][n]);
                    }
                }
                let fm = f * law.tangent_apply(&state, &de);
                for a in 0..npe {
                    let mat = fm * grads[a];
                    let geo = grads[a].dot(&s_g[b]);
                    for i in 0..3 {
                        let mut v = mat[i] * scale;
                        if i == j {
                            v += geo * scale;
                        }
                        k[(3 * a + i, 3 * b + j)] += v;
                    }
                }
            }
        }
    }

    // enforce exact symmetry of the hyperelastic tangent
    for r in 0..3 * npe {
        for c in (r + 1)..3 * npe {
            let avg = 0.5 * (k[(r, c)] + k[(c, r)]);
            k[(r, c)] = avg;
            k[(c, r)] = avg;
        }
    }

    Ok(ElementContribution {
        force,
        stiffness: k,
    })
}

/// Assembles the out-of-balance residual (internal - external forces) and the
/// consistent tangent for the current displacement field.
///
/// External forces include boundary tractions stored on the mesh, the body
/// force and any concentrated loads, all scaled by `ext_scale` (used by the
/// incremental solver). The tangent is returned on the full dof set;
/// Dirichlet elimination happens at solve time through [`DofMap`].
pub fn assemble_with_loads(
    mesh: &Mesh,
    law: &MaterialLaw,
    u: &NodalField,
    loads: &Loads,
    ext_scale: f64,
) -> Result<(NodalField, CooMatrix<f64>)> {
    let dim = mesh.dim();
    let contributions = exec::map_range(mesh.elements.len(), |e| element_internal(mesh, law, u, e));

    let mut f_int = DVector::<f64>::zeros(mesh.dof_count());
    let npe = mesh.element_kind.nodes_per_element();
    let mut coo = CooMatrix::new(mesh.dof_count(), mesh.dof_count());
    for (e, contrib) in contributions.into_iter().enumerate() {
        let contrib = contrib?;
        let conn = mesh.element_nodes(e);
        for a in 0..npe {
            for i in 0..dim {
                f_int[mesh.dof(conn[a], i)] += contrib.force[3 * a + i];
            }
        }
        for a in 0..npe {
            for i in 0..dim {
                let ga = mesh.dof(conn[a], i);
                for b in 0..npe {
                    for j in 0..dim {
                        coo.push(ga, mesh.dof(conn[b], j), contrib.stiffness[(3 * a + i, 3 * b + j)]);
                    }
                }
            }
        }
    }

    let f_ext = external_force(mesh, loads)?;
    let residual = DVector::from_fn(mesh.dof_count(), |d, _| {
        f_int[d] - ext_scale * f_ext.as_vector()[d]
    });
    Ok((NodalField::from_vector(mesh, residual)?, coo))
}

/// Residual and tangent under boundary tractions and a body force
/// (see [`assemble_with_loads`] for concentrated loads and scaling).
pub fn assemble(
    mesh: &Mesh,
    law: &MaterialLaw,
    u: &NodalField,
    body_force: Vector3<f64>,
) -> Result<(NodalField, CooMatrix<f64>)> {
    assemble_with_loads(
        mesh,
        law,
        u,
        &Loads {
            body_force,
            nodal_forces: Vec::new(),
        },
        1.0,
    )
}

/// Consistent external force vector: boundary tractions from the mesh, body
/// force and concentrated nodal loads.
pub fn external_force(mesh: &Mesh, loads: &Loads) -> Result<NodalField> {
    let dim = mesh.dim();
    let mut f = DVector::<f64>::zeros(mesh.dof_count());

    if loads.body_force.norm() > 0.0 {
        for e in 0..mesh.elements.len() {
            let conn = mesh.element_nodes(e);
            for (xi, w) in mesh.element_kind.gauss_points() {
                let (_, detj) = mesh.reference_gradients(e, &xi)?;
                let shape = mesh.element_kind.shape(&xi);
                for (a, &n) in conn.iter().enumerate() {
                    for i in 0..dim {
                        f[mesh.dof(n, i)] += shape[a] * loads.body_force[i] * w * detj;
                    }
                }
            }
        }
    }

    const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    for facet in &mesh.neumann {
        let traction = Vector3::from_row_slice(&facet.traction);
        match mesh.element_kind {
            ElementKind::Quad4 => {
                if facet.nodes.len() != 2 {
                    return Err(Error::Geometry("2D neumann facet must have 2 nodes".into()));
                }
                let a = mesh.node(facet.nodes[0]);
                let b = mesh.node(facet.nodes[1]);
                let half_len = 0.5 * (b - a).norm();
                for &g in &GAUSS_1D {
                    let shape = [0.5 * (1.0 - g), 0.5 * (1.0 + g)];
                    for (k, &n) in facet.nodes.iter().enumerate() {
                        for i in 0..dim {
                            f[mesh.dof(n, i)] += shape[k] * traction[i] * half_len;
                        }
                    }
                }
            }
            ElementKind::Hex8 => {
                if facet.nodes.len() != 4 {
                    return Err(Error::Geometry("3D neumann facet must have 4 nodes".into()));
                }
                let p: Vec<Vector3<f64>> =
                    facet.nodes.iter().map(|&n| mesh.node(n).coords).collect();
                for &gs in &GAUSS_1D {
                    for &gt in &GAUSS_1D {
                        let shape = [
                            0.25 * (1.0 - gs) * (1.0 - gt),
                            0.25 * (1.0 + gs) * (1.0 - gt),
                            0.25 * (1.0 + gs) * (1.0 + gt),
                            0.25 * (1.0 - gs) * (1.0 + gt),
                        ];
                        let ds = 0.25
                            * (-(1.0 - gt) * p[0] + (1.0 - gt) * p[1] + (1.0 + gt) * p[2]
                                - (1.0 + gt) * p[3]);
                        let dt = 0.25
                            * (-(1.0 - gs) * p[0] - (1.0 + gs) * p[1]
                                + (1.0 + gs) * p[2]
                                + (1.0 - gs) * p[3]);
                        let jac = ds.cross(&dt).norm();
                        for (k, &n) in facet.nodes.iter().enumerate() {
                            for i in 0..dim {
                                f[mesh.dof(n, i)] += shape[k] * traction[i] * jac;
                            }
                        }
                    }
                }
            }
        }
    }

    for &(node, force) in &loads.nodal_forces {
        for i in 0..dim {
            f[mesh.dof(node, i)] += force[i];
        }
    }

    NodalField::from_vector(mesh, f)
}

/// Classical small-strain linear-elastic stiffness matrix (engineering
/// B-matrix route), independent of the finite-strain assembly.
pub fn linear_stiffness(mesh: &Mesh, young: f64, poisson: f64) -> Result<CooMatrix<f64>> {
    MaterialLaw::linear(young, poisson)?;
    let dim = mesh.dim();
    let npe = mesh.element_kind.nodes_per_element();

    let kes = exec::map_range(mesh.elements.len(), |e| -> Result<DMatrix<f64>> {
        let ndof = dim * npe;
        let mut ke = DMatrix::<f64>::zeros(ndof, ndof);
        for (xi, w) in mesh.element_kind.gauss_points() {
            let (grads, detj) = mesh.reference_gradients(e, &xi)?;
            match mesh.element_kind {
                ElementKind::Quad4 => {
                    let c = young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
                    let d = nalgebra::Matrix3::new(
                        c * (1.0 - poisson),
                        c * poisson,
                        0.0,
                        c * poisson,
                        c * (1.0 - poisson),
                        0.0,
                        0.0,
                        0.0,
                        c * (1.0 - 2.0 * poisson) / 2.0,
                    );
                    let mut b = DMatrix::<f64>::zeros(3, ndof);
                    for a in 0..npe {
                        b[(0, 2 * a)] = grads[a].x;
                        b[(1, 2 * a + 1)] = grads[a].y;
                        b[(2, 2 * a)] = grads[a].y;
                        b[(2, 2 * a + 1)] = grads[a].x;
                    }
                    ke += b.transpose() * d * &b * (w * detj);
                }
                ElementKind::Hex8 => {
                    let (lambda, mu) = MaterialLaw::Linear { young, poisson }.lame();
                    let mut d = DMatrix::<f64>::zeros(6, 6);
                    for i in 0..3 {
                        for j in 0..3 {
                            d[(i, j)] = lambda;
                        }
                        d[(i, i)] = lambda + 2.0 * mu;
                        d[(3 + i, 3 + i)] = mu;
                    }
                    let mut b = DMatrix::<f64>::zeros(6, ndof);
                    for a in 0..npe {
                        let g = grads[a];
                        b[(0, 3 * a)] = g.x;
                        b[(1, 3 * a + 1)] = g.y;
                        b[(2, 3 * a + 2)] = g.z;
                        // engineering shear rows: gamma_xy, gamma_yz, gamma_zx
                        b[(3, 3 * a)] = g.y;
                        b[(3, 3 * a + 1)] = g.x;
                        b[(4, 3 * a + 1)] = g.z;
                        b[(4, 3 * a + 2)] = g.y;
                        b[(5, 3 * a)] = g.z;
                        b[(5, 3 * a + 2)] = g.x;
                    }
                    ke += b.transpose() * d * &b * (w * detj);
                }
            }
        }
        Ok(ke)
    });

    let mut coo = CooMatrix::new(mesh.dof_count(), mesh.dof_count());
    for (e, ke) in kes.into_iter().enumerate() {
        let ke = ke?;
        let conn = mesh.element_nodes(e);
        for a in 0..npe {
            for i in 0..dim {
                for b in 0..npe {
                    for j in 0..dim {
                        coo.push(
                            mesh.dof(conn[a], i),
                            mesh.dof(conn[b], j),
                            ke[(dim * a + i, dim * b + j)],
                        );
                    }
                }
            }
        }
    }
    Ok(coo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_quad_mesh() -> Mesh {
        let mut mesh = Mesh::rect_quad_grid(2, 1, 2.0, 1.0).unwrap();
        let left = mesh.nodes_where(|p| p.x.abs() < 1e-12);
        mesh.fix_nodes(&left);
        mesh
    }

    fn coo_to_dense(coo: &CooMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(coo.nrows(), coo.ncols());
        for (r, c, &v) in coo.triplet_iter() {
            m[(r, c)] += v;
        }
        m
    }

    #[test]
    fn reference_state_is_in_equilibrium() {
        let mesh = small_quad_mesh();
        for law in [
            MaterialLaw::linear(1.0e6, 0.3).unwrap(),
            MaterialLaw::neo_hookean(5.0e5, 2.0e5).unwrap(),
        ] {
            let u = NodalField::zeros(&mesh);
            let (r, _) = assemble(&mesh, &law, &u, Vector3::zeros()).unwrap();
            assert_relative_eq!(r.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tangent_at_zero_matches_small_strain_stiffness() {
        // independent small-strain assembly as oracle
        for mesh in [
            small_quad_mesh(),
            Mesh::hex_block_grid(2, 1, 1, 1.0, 0.5, 0.5).unwrap(),
        ] {
            let (young, poisson) = (2.0e6, 0.3);
            let law = MaterialLaw::linear(young, poisson).unwrap();
            let u = NodalField::zeros(&mesh);
            let (_, tangent) = assemble(&mesh, &law, &u, Vector3::zeros()).unwrap();
            let oracle = linear_stiffness(&mesh, young, poisson).unwrap();
            let diff = coo_to_dense(&tangent) - coo_to_dense(&oracle);
            let scale = coo_to_dense(&oracle).norm();
            assert!(diff.norm() / scale < 1e-12, "mismatch {}", diff.norm() / scale);
        }
    }

    #[test]
    fn tangent_matches_finite_differences_of_residual() {
        let mesh = small_quad_mesh();
        for law in [
            MaterialLaw::linear(1.0e6, 0.3).unwrap(),
            MaterialLaw::neo_hookean(4.0e5, 1.5e5).unwrap(),
        ] {
            // random-ish smooth displacement
            let u0 = NodalField::from_fn(&mesh, |p| {
                Vector3::new(
                    0.02 * p.x * p.y + 0.01 * p.x,
                    -0.015 * p.x * p.x + 0.02 * p.y,
                    0.0,
                )
            });
            let (_, tangent) = assemble(&mesh, &law, &u0, Vector3::zeros()).unwrap();
            let k = coo_to_dense(&tangent);
            let n = mesh.dof_count();
            let h = 1e-7;
            let mut k_fd = DMatrix::<f64>::zeros(n, n);
            for d in 0..n {
                let mut up = u0.clone();
                let mut um = u0.clone();
                up[d] += h;
                um[d] -= h;
                let (rp, _) = assemble(&mesh, &law, &up, Vector3::zeros()).unwrap();
                let (rm, _) = assemble(&mesh, &law, &um, Vector3::zeros()).unwrap();
                for r in 0..n {
                    k_fd[(r, d)] = (rp[r] - rm[r]) / (2.0 * h);
                }
            }
            let rel = (&k - &k_fd).norm() / k.norm();
            assert!(rel < 1e-5, "tangent FD relative error {rel:.3e}");
        }
    }

    #[test]
    fn tangent_is_symmetric() {
        let mesh = Mesh::hex_block_grid(1, 1, 2, 0.5, 0.5, 1.0).unwrap();
        let law = MaterialLaw::neo_hookean(3.0e5, 1.0e5).unwrap();
        let u = NodalField::from_fn(&mesh, |p| {
            Vector3::new(0.03 * p.z * p.z, -0.02 * p.x * p.z, 0.04 * p.y)
        });
        let (_, tangent) = assemble(&mesh, &law, &u, Vector3::zeros()).unwrap();
        let k = coo_to_dense(&tangent);
        assert_relative_eq!((&k - &k.transpose()).norm(), 0.0, epsilon = 1e-9 * k.norm());
    }

    #[test]
    fn traction_resultant_matches_facet_area() {
        // uniform traction on the right edge of a rectangle: resultant = t * area
        let mut mesh = Mesh::rect_quad_grid(2, 2, 2.0, 1.0).unwrap();
        let right: Vec<usize> = mesh.nodes_where(|p| (p.x - 2.0).abs() < 1e-12);
        for w in right.windows(2) {
            mesh.neumann.push(crate::fem::NeumannFacet {
                nodes: vec![w[0], w[1]],
                traction: [250.0, 0.0, 0.0],
            });
        }
        let f = external_force(&mesh, &Loads::none()).unwrap();
        let total: f64 = (0..mesh.node_count()).map(|n| f.node(n).x).sum();
        assert_relative_eq!(total, 250.0, epsilon = 1e-9);
    }

    #[test]
    fn body_force_resultant_matches_volume() {
        let mesh = Mesh::hex_block_grid(2, 2, 2, 1.0, 1.0, 1.0).unwrap();
        let loads = Loads {
            body_force: Vector3::new(0.0, 0.0, -9.81),
            nodal_forces: vec![],
        };
        let f = external_force(&mesh, &loads).unwrap();
        let total: f64 = (0..mesh.node_count()).map(|n| f.node(n).z).sum();
        assert_relative_eq!(total, -9.81, epsilon = 1e-9);
    }

    #[test]
    fn inadmissible_element_is_named() {
        let mesh = small_quad_mesh();
        let law = MaterialLaw::neo_hookean(1.0e5, 1.0e5).unwrap();
        // crush the mesh far past inversion
        let u = NodalField::from_fn(&mesh, |p| Vector3::new(-2.0 * p.x, 0.0, 0.0));
        let err = assemble(&mesh, &law, &u, Vector3::zeros()).unwrap_err();
        match err {
            Error::InadmissibleState(msg) => assert!(msg.contains("element")),
            other => panic!("expected inadmissible state, got {other}"),
        }
    }
}
