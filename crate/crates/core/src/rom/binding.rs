//! Binding of scene points to mesh elements by inverse isoparametric mapping.

use nalgebra::{Matrix2, Matrix3, Point3, Vector2, Vector3};
use rstar::{primitives::GeomWithData, RTree};

use crate::error::Error;
use crate::fem::{ElementKind, Mesh};
use crate::Result;

/// One bound scene point: host element, natural coordinates and whether the
/// nearest-node fallback was used.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BoundPoint {
    pub id: usize,
    pub element: usize,
    pub natural: [f64; 3],
    pub fallback: bool,
}

/// Result of binding a point set, including rejected points (id, distance).
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct PointBinding {
    pub points: Vec<BoundPoint>,
    pub rejected: Vec<(usize, f64)>,
}

impl PointBinding {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of a bound point by its id.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }
}

/// Binding thresholds.
#[derive(Debug, Clone)]
pub struct BindOptions {
    /// Containment tolerance on natural coordinates.
    pub natural_tol: f64,
    /// Points within this distance of the mesh surface (relative to the
    /// bounding-box diagonal) are bound with clamped natural coordinates.
    pub surface_band_fraction: f64,
    /// Points beyond this distance (relative to the bounding-box diagonal)
    /// are excluded.
    pub reject_fraction: f64,
}

impl Default for BindOptions {
    fn default() -> Self {
        BindOptions {
            natural_tol: 1e-8,
            surface_band_fraction: 1e-3,
            reject_fraction: 0.02,
        }
    }
}

/// Newton inversion of the isoparametric map of one element. Returns the
/// natural coordinates minimizing |X(xi) - p| locally.
fn inverse_map(mesh: &Mesh, element: usize, p: &Point3<f64>) -> Vector3<f64> {
    let mut xi = Vector3::zeros();
    let conn = mesh.element_nodes(element);
    for _ in 0..30 {
        let shape = mesh.element_kind.shape(&xi);
        let dnat = mesh.element_kind.shape_grad_natural(&xi);
        let mut x = Vector3::zeros();
        for (a, &n) in conn.iter().enumerate() {
            x += shape[a] * mesh.node(n).coords;
        }
        let r = p.coords - x;
        match mesh.element_kind {
            ElementKind::Quad4 => {
                let mut jac = Matrix2::zeros();
                for (a, &n) in conn.iter().enumerate() {
                    let xc = mesh.node(n);
                    jac[(0, 0)] += xc.x * dnat[a].x;
                    jac[(0, 1)] += xc.x * dnat[a].y;
                    jac[(1, 0)] += xc.y * dnat[a].x;
                    jac[(1, 1)] += xc.y * dnat[a].y;
                }
                let Some(inv) = jac.try_inverse() else { break };
                let d = inv * Vector2::new(r.x, r.y);
                xi.x += d.x;
                xi.y += d.y;
                if d.norm() < 1e-13 {
                    break;
                }
            }
            ElementKind::Hex8 => {
                let mut jac = Matrix3::zeros();
                for (a, &n) in conn.iter().enumerate() {
                    let xc = mesh.node(n);
                    for i in 0..3 {
                        for j in 0..3 {
                            jac[(i, j)] += xc[i] * dnat[a][j];
                        }
                    }
                }
                let Some(inv) = jac.try_inverse() else { break };
                let d = inv * r;
                xi += d;
                if d.norm() < 1e-13 {
                    break;
                }
            }
        }
    }
    xi
}

/// Binds scene points (already in the object frame) to their host elements.
///
/// Points inside an element (natural coordinates within tolerance) bind
/// exactly. Points slightly off the mesh (within the surface band) bind to
/// the closest element with clamped natural coordinates. Points farther away
/// but inside the reject radius fall back to their nearest node and are
/// flagged; anything beyond is excluded and reported.
pub fn bind_points(
    mesh: &Mesh,
    points: &[(usize, Point3<f64>)],
    options: &BindOptions,
) -> Result<PointBinding> {
    if points.is_empty() {
        return Err(Error::Binding("no points to bind".into()));
    }
    let diag = mesh.bbox_diagonal();
    let surface_band = options.surface_band_fraction * diag;
    let reject_at = options.reject_fraction * diag;

    // node tree and node -> elements adjacency
    let tree = RTree::bulk_load(
        (0..mesh.node_count())
            .map(|n| {
                let p = mesh.node(n);
                GeomWithData::new([p.x, p.y, p.z], n)
            })
            .collect(),
    );
    let mut node_elements: Vec<Vec<usize>> = vec![Vec::new(); mesh.node_count()];
    for (e, conn) in mesh.elements.iter().enumerate() {
        for &n in conn {
            node_elements[n].push(e);
        }
    }

    let dim = mesh.dim();
    let mut binding = PointBinding::default();
    for &(id, p) in points {
        // candidate elements: union of elements around the nearest few nodes
        let mut candidates: Vec<usize> = Vec::new();
        let mut nearest_node = None;
        for nn in tree.nearest_neighbor_iter([p.x, p.y, p.z]).take(4) {
            if nearest_node.is_none() {
                nearest_node = Some(nn.data);
            }
            for &e in &node_elements[nn.data] {
                if !candidates.contains(&e) {
                    candidates.push(e);
                }
            }
        }
        candidates.sort_unstable();
        let nearest_node = nearest_node.expect("tree is non-empty");

        let mut best: Option<(usize, Vector3<f64>, f64)> = None;
        let mut contained: Option<(usize, Vector3<f64>)> = None;
        for &e in &candidates {
            let xi = inverse_map(mesh, e, &p);
            let inside = (0..dim).all(|c| xi[c].abs() <= 1.0 + options.natural_tol);
            if inside {
                contained = Some((e, xi));
                break;
            }
            let clamped = Vector3::new(
                xi.x.clamp(-1.0, 1.0),
                xi.y.clamp(-1.0, 1.0),
                xi.z.clamp(-1.0, 1.0),
            );
            let x = mesh.interpolate_position(e, &clamped);
            let d = (x.coords - p.coords).norm();
            if best.is_none() || d < best.as_ref().unwrap().2 {
                best = Some((e, clamped, d));
            }
        }

        if let Some((element, xi)) = contained {
            let natural = Vector3::new(
                xi.x.clamp(-1.0, 1.0),
                xi.y.clamp(-1.0, 1.0),
                xi.z.clamp(-1.0, 1.0),
            );
            binding.points.push(BoundPoint {
                id,
                element,
                natural: [natural.x, natural.y, natural.z],
                fallback: false,
            });
            continue;
        }
        let (element, xi, dist) = best.expect("candidate list is non-empty");
        if dist <= surface_band {
            binding.points.push(BoundPoint {
                id,
                element,
                natural: [xi.x, xi.y, xi.z],
                fallback: false,
            });
        } else if dist <= reject_at {
            // nearest-node fallback: corner coordinates in the first element
            // around that node
            let element = node_elements[nearest_node][0];
            let local = mesh
                .element_nodes(element)
                .iter()
                .position(|&n| n == nearest_node)
                .expect("adjacency is consistent");
            let corner = mesh.element_kind.corner_natural(local);
            binding.points.push(BoundPoint {
                id,
                element,
                natural: [corner.x, corner.y, corner.z],
                fallback: true,
            });
        } else {
            binding.rejected.push((id, dist));
        }
    }
    Ok(binding)
}
