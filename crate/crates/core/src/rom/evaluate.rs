//! Displacement and sensitivity queries against a separated solution.

use nalgebra::Vector3;

use crate::exec;
use crate::fem::Mesh;
use crate::mor::SeparatedSolution;
use crate::rom::PointBinding;
use crate::Result;

/// What to evaluate and where.
#[derive(Debug, Clone)]
pub struct EvaluationQuery<'a> {
    pub target: QueryTarget<'a>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum QueryTarget<'a> {
    /// Mesh nodes by index (no interpolation).
    Nodes(&'a [usize]),
    /// Points bound to elements.
    Bound(&'a PointBinding),
}

impl<'a> EvaluationQuery<'a> {
    pub fn at_nodes(nodes: &'a [usize], mu: Vec<f64>) -> Self {
        EvaluationQuery {
            target: QueryTarget::Nodes(nodes),
            mu,
        }
    }

    pub fn at_bound_points(binding: &'a PointBinding, mu: Vec<f64>) -> Self {
        EvaluationQuery {
            target: QueryTarget::Bound(binding),
            mu,
        }
    }
}

/// Evaluation output; `mu_clamped` flags queries outside the parameter box
/// (values are computed at the clamped parameters).
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub values: Vec<Vector3<f64>>,
    pub mu_clamped: bool,
}

fn eval_with_coefficients(
    sol: &SeparatedSolution,
    mesh: &Mesh,
    target: &QueryTarget<'_>,
    coeffs: &[f64],
) -> Result<Vec<Vector3<f64>>> {
    sol.compatible_with(mesh)?;
    match target {
        QueryTarget::Nodes(nodes) => Ok(exec::map_collect(nodes, |&n| {
            sol.node_displacement(n, coeffs)
        })),
        QueryTarget::Bound(binding) => Ok(exec::map_collect(&binding.points, |b| {
            let shape = mesh
                .element_kind
                .shape(&Vector3::from_row_slice(&b.natural));
            let mut u = Vector3::zeros();
            for (a, &n) in mesh.element_nodes(b.element).iter().enumerate() {
                u += shape[a] * sol.node_displacement(n, coeffs);
            }
            u
        })),
    }
}

/// U(X, mu): finite-element interpolation in space, piecewise-linear
/// interpolation in each parameter; cost linear in rank x points.
pub fn evaluate_displacement(
    sol: &SeparatedSolution,
    mesh: &Mesh,
    query: &EvaluationQuery<'_>,
) -> Result<Evaluation> {
    let (mu, clamped) = sol.pspace().clamp(&query.mu);
    let coeffs = sol.coefficients(&mu);
    Ok(Evaluation {
        values: eval_with_coefficients(sol, mesh, &query.target, &coeffs)?,
        mu_clamped: clamped,
    })
}

/// dU/dmu_k: only the k-th parameter factor is differentiated (its
/// piecewise-linear mode has a piecewise-constant slope; knots take the
/// right-segment value, the upper bound the left-segment value).
pub fn evaluate_sensitivity(
    sol: &SeparatedSolution,
    mesh: &Mesh,
    query: &EvaluationQuery<'_>,
    k: usize,
) -> Result<Evaluation> {
    let (mu, clamped) = sol.pspace().clamp(&query.mu);
    let coeffs = sol.coefficient_derivatives(&mu, k)?;
    Ok(Evaluation {
        values: eval_with_coefficients(sol, mesh, &query.target, &coeffs)?,
        mu_clamped: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Mesh, NodalField};
    use crate::mor::{BuildMethod, ParameterSpace, SeparatedSolution};
    use crate::rom::{bind_points, BindOptions};
    use approx::assert_relative_eq;
    use nalgebra::{DVector, Point3};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_solution(mesh: &Mesh, rank: usize) -> SeparatedSolution {
        let ps = ParameterSpace::uniform(&[("a", 0.0, 1.0, 6), ("b", -1.0, 1.0, 5)]).unwrap();
        let mut sol = SeparatedSolution::empty(
            ps,
            mesh.node_count(),
            mesh.dim(),
            BuildMethod::SparsePgd,
            "test",
        );
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..rank {
            let space =
                DVector::from_fn(mesh.dof_count(), |_, _| rng.random_range(-1.0..1.0));
            let ga = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let gb = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            sol.push_mode(space, vec![ga, gb]).unwrap();
        }
        sol
    }

    #[test]
    fn rank0_is_zero_everywhere() {
        let mesh = Mesh::rect_quad_grid(3, 2, 1.0, 0.5).unwrap();
        let sol = test_solution(&mesh, 0);
        let nodes: Vec<usize> = (0..mesh.node_count()).collect();
        let q = EvaluationQuery::at_nodes(&nodes, vec![0.3, 0.2]);
        let eval = evaluate_displacement(&sol, &mesh, &q).unwrap();
        assert!(eval.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn node_query_matches_direct_summation_oracle() {
        let mesh = Mesh::rect_quad_grid(3, 2, 1.0, 0.5).unwrap();
        let sol = test_solution(&mesh, 4);
        // grid-node parameter values and a mesh node: no interpolation error
        let mu = vec![0.4, 0.5];
        let node = 5;
        let q = EvaluationQuery::at_nodes(std::slice::from_ref(&node), mu.clone());
        let eval = evaluate_displacement(&sol, &mesh, &q).unwrap();
        // oracle: direct triple summation over modes and axes
        let mut expect = Vector3::zeros();
        for i in 0..sol.rank() {
            let ga = sol.pspace().interp(0, sol.param_mode(0, i), mu[0]);
            let gb = sol.pspace().interp(1, sol.param_mode(1, i), mu[1]);
            for c in 0..2 {
                expect[c] += sol.space_mode(i)[node * 2 + c] * ga * gb;
            }
        }
        assert_relative_eq!((eval.values[0] - expect).norm(), 0.0, epsilon = 1e-12);
        assert!(!eval.mu_clamped);
    }

    #[test]
    fn out_of_box_parameters_clamp_and_flag() {
        let mesh = Mesh::rect_quad_grid(2, 2, 1.0, 1.0).unwrap();
        let sol = test_solution(&mesh, 2);
        let nodes = [0usize];
        let inside = evaluate_displacement(
            &sol,
            &mesh,
            &EvaluationQuery::at_nodes(&nodes, vec![1.0, 1.0]),
        )
        .unwrap();
        let outside = evaluate_displacement(
            &sol,
            &mesh,
            &EvaluationQuery::at_nodes(&nodes, vec![3.0, 5.0]),
        )
        .unwrap();
        assert!(outside.mu_clamped);
        assert_relative_eq!(
            (outside.values[0] - inside.values[0]).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn bound_evaluation_matches_interpolation_oracle() {
        // oracle: interpolate the evaluated nodal field with shape functions
        let mesh = Mesh::hex_block_grid(2, 2, 2, 1.0, 1.0, 1.0).unwrap();
        let sol = {
            let ps = ParameterSpace::uniform(&[("a", 0.0, 1.0, 4)]).unwrap();
            let mut s = SeparatedSolution::empty(
                ps,
                mesh.node_count(),
                3,
                BuildMethod::Pod,
                "test",
            );
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..3 {
                s.push_mode(
                    DVector::from_fn(mesh.dof_count(), |_, _| rng.random_range(-1.0..1.0)),
                    vec![DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0))],
                )
                .unwrap();
            }
            s
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<(usize, Point3<f64>)> = (0..100)
            .map(|i| {
                // random surface points (top face)
                (
                    i,
                    Point3::new(
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..1.0),
                        1.0,
                    ),
                )
            })
            .collect();
        let binding = bind_points(&mesh, &pts, &BindOptions::default()).unwrap();
        let mu = vec![0.37];
        let eval = evaluate_displacement(
            &sol,
            &mesh,
            &EvaluationQuery::at_bound_points(&binding, mu.clone()),
        )
        .unwrap();
        // oracle path: full nodal field, then FE interpolation per point
        let field = NodalField::from_vector(&mesh, sol.evaluate_at_nodes(&mu)).unwrap();
        for (b, v) in binding.points.iter().zip(&eval.values) {
            let shape = mesh
                .element_kind
                .shape(&Vector3::from_row_slice(&b.natural));
            let mut expect = Vector3::zeros();
            for (a, &n) in mesh.element_nodes(b.element).iter().enumerate() {
                expect += shape[a] * field.node(n);
            }
            assert_relative_eq!((v - expect).norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn sensitivity_matches_finite_differences_between_knots() {
        let mesh = Mesh::rect_quad_grid(3, 2, 1.0, 0.5).unwrap();
        let sol = test_solution(&mesh, 4);
        let nodes: Vec<usize> = (0..mesh.node_count()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let mu = vec![rng.random_range(0.01..0.99), rng.random_range(-0.95..0.95)];
            for k in 0..2 {
                let grid = &sol.pspace().axis(k).grid;
                let spacing = grid[1] - grid[0];
                let h = spacing / 100.0;
                // stay inside one segment
                let (seg, t) = sol.pspace().locate(k, mu[k]);
                if t < 0.02 || t > 0.98 {
                    continue;
                }
                let _ = seg;
                let sens = evaluate_sensitivity(
                    &sol,
                    &mesh,
                    &EvaluationQuery::at_nodes(&nodes, mu.clone()),
                    k,
                )
                .unwrap();
                let mut mu_p = mu.clone();
                let mut mu_m = mu.clone();
                mu_p[k] += h;
                mu_m[k] -= h;
                let up = evaluate_displacement(
                    &sol,
                    &mesh,
                    &EvaluationQuery::at_nodes(&nodes, mu_p),
                )
                .unwrap();
                let um = evaluate_displacement(
                    &sol,
                    &mesh,
                    &EvaluationQuery::at_nodes(&nodes, mu_m),
                )
                .unwrap();
                for ((s, p), m) in sens.values.iter().zip(&up.values).zip(&um.values) {
                    let fd = (p - m) / (2.0 * h);
                    let denom = s.norm().max(1e-9);
                    assert!(
                        (s - fd).norm() / denom < 1e-6,
                        "sensitivity FD mismatch: {:?} vs {:?}",
                        s,
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn knot_sensitivity_uses_right_segment() {
        let mesh = Mesh::rect_quad_grid(2, 1, 1.0, 0.5).unwrap();
        let ps = ParameterSpace::uniform(&[("a", 0.0, 1.0, 3)]).unwrap();
        let mut sol =
            SeparatedSolution::empty(ps, mesh.node_count(), 2, BuildMethod::Pgd, "test");
        sol.push_mode(
            DVector::from_element(mesh.dof_count(), 1.0),
            vec![DVector::from_vec(vec![0.0, 1.0, 3.0])],
        )
        .unwrap();
        let nodes = [0usize];
        // field slope at the middle knot 0.5: right segment, (3-1)/0.5 = 4
        let s = evaluate_sensitivity(
            &sol,
            &mesh,
            &EvaluationQuery::at_nodes(&nodes, vec![0.5]),
            0,
        )
        .unwrap();
        assert_relative_eq!(s.values[0].x, 4.0, epsilon = 1e-12);
        // at the upper bound: left-segment slope (same segment here)
        let s = evaluate_sensitivity(
            &sol,
            &mesh,
            &EvaluationQuery::at_nodes(&nodes, vec![1.0]),
            0,
        )
        .unwrap();
        assert_relative_eq!(s.values[0].x, 4.0, epsilon = 1e-12);
        // finite differences within the right segment agree to 1e-6
        let h = 0.005;
        let at = |x: f64| {
            evaluate_displacement(
                &sol,
                &mesh,
                &EvaluationQuery::at_nodes(&nodes, vec![x]),
            )
            .unwrap()
            .values[0]
        };
        let fd_right = (at(0.5 + 2.0 * h) - at(0.5 + h)).x / h;
        assert_relative_eq!(fd_right, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn concatenated_solutions_evaluate_additively() {
        let mesh = Mesh::rect_quad_grid(3, 2, 1.0, 0.5).unwrap();
        let a = test_solution(&mesh, 2);
        let b = test_solution(&mesh, 3);
        let mut ab = a.clone();
        for i in 0..b.rank() {
            ab.push_mode(
                DVector::from_vec(b.space_mode(i).to_vec()),
                vec![
                    DVector::from_vec(b.param_mode(0, i).to_vec()),
                    DVector::from_vec(b.param_mode(1, i).to_vec()),
                ],
            )
            .unwrap();
        }
        let nodes: Vec<usize> = (0..mesh.node_count()).collect();
        let mu = vec![0.63, -0.41];
        let ea = evaluate_displacement(&a, &mesh, &EvaluationQuery::at_nodes(&nodes, mu.clone()))
            .unwrap();
        let eb = evaluate_displacement(&b, &mesh, &EvaluationQuery::at_nodes(&nodes, mu.clone()))
            .unwrap();
        let eab =
            evaluate_displacement(&ab, &mesh, &EvaluationQuery::at_nodes(&nodes, mu)).unwrap();
        for ((va, vb), vab) in ea.values.iter().zip(&eb.values).zip(&eab.values) {
            assert_relative_eq!((va + vb - vab).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn evaluation_is_identical_across_execution_modes() {
        let mesh = Mesh::hex_block_grid(2, 2, 2, 1.0, 1.0, 1.0).unwrap();
        let sol = {
            let ps = ParameterSpace::uniform(&[("a", 0.0, 1.0, 4)]).unwrap();
            let mut s = SeparatedSolution::empty(
                ps,
                mesh.node_count(),
                3,
                BuildMethod::Pod,
                "test",
            );
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..5 {
                s.push_mode(
                    DVector::from_fn(mesh.dof_count(), |_, _| rng.random_range(-1.0..1.0)),
                    vec![DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0))],
                )
                .unwrap();
            }
            s
        };
        let nodes: Vec<usize> = (0..mesh.node_count()).collect();
        let q = EvaluationQuery::at_nodes(&nodes, vec![0.77]);
        crate::exec::set_sequential(false);
        let par = evaluate_displacement(&sol, &mesh, &q).unwrap();
        crate::exec::set_sequential(true);
        let seq = evaluate_displacement(&sol, &mesh, &q).unwrap();
        crate::exec::set_sequential(false);
        for (a, b) in par.values.iter().zip(&seq.values) {
            assert_eq!(a, b, "bit-identical across execution modes");
        }
    }
}
