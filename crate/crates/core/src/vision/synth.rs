//! Synthetic observation sequences: surface sampling, deformation through the
//! separated solution, projection, pixel noise and gross outliers.
//!
//! Stands in for real feature tracks; everything is deterministic for a fixed
//! seed.

use std::io::Write;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Error;
use crate::fem::Mesh;
use crate::mor::SeparatedSolution;
use crate::rom::{evaluate_displacement, BoundPoint, EvaluationQuery, PointBinding};
use crate::vision::{project_point, CameraModel, RigidTransform};
use crate::Result;

/// A tracked material point on the mesh surface (reference configuration,
/// object frame).
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub id: usize,
    pub position: Point3<f64>,
    pub element: usize,
    pub natural: [f64; 3],
    /// Outward surface normal in the reference configuration.
    pub normal: Vector3<f64>,
}

/// One pixel measurement of a tracked point.
#[derive(Debug, Clone, Copy)]
pub struct Measurement {
    pub point_id: usize,
    pub u: f64,
    pub v: f64,
    /// Ground-truth outlier flag (synthetic data only).
    pub is_outlier: bool,
}

/// All measurements of one frame with the camera pose that produced them.
#[derive(Debug, Clone)]
pub struct ObservationFrame {
    pub index: usize,
    pub w_t_c: RigidTransform,
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    pub n_points: usize,
    /// Gaussian pixel noise (standard deviation per coordinate).
    pub noise_sigma: f64,
    /// Fraction of measurements replaced by uniform random pixels.
    pub outlier_fraction: f64,
    pub seed: u64,
}

/// A generated sequence with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub samples: Vec<SurfaceSample>,
    pub binding: PointBinding,
    pub frames: Vec<ObservationFrame>,
    pub truth_mu: Vec<Vec<f64>>,
}

/// Area-weighted random points on the mesh surface, deterministic per seed.
pub fn sample_surface_points(mesh: &Mesh, n: usize, seed: u64) -> Result<Vec<SurfaceSample>> {
    let facets = mesh.surface_facets();
    if facets.is_empty() {
        return Err(Error::Scenario("mesh has no surface facets".into()));
    }
    let mut cumulative = Vec::with_capacity(facets.len());
    let mut total = 0.0;
    let mut normals = Vec::with_capacity(facets.len());
    for f in &facets {
        let (normal, area) = mesh.facet_normal_area(f);
        total += area;
        cumulative.push(total);
        normals.push(normal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let r = rng.random_range(0.0..total);
        let fi = cumulative.partition_point(|&c| c < r).min(facets.len() - 1);
        let facet = &facets[fi];
        let s = rng.random_range(-1.0..1.0);
        let t = rng.random_range(-1.0..1.0);
        let xi = mesh.face_natural_coords(facet.local_face, s, t);
        let position = mesh.interpolate_position(facet.element, &xi);
        out.push(SurfaceSample {
            id,
            position,
            element: facet.element,
            natural: [xi.x, xi.y, xi.z],
            normal: normals[fi],
        });
    }
    Ok(out)
}

/// Generates per-frame pixel observations of the deforming object.
///
/// Visibility uses back-face culling of the reference normals (rotated to
/// world) against each frame's camera center, plus the image bounds and the
/// positive-depth requirement. Noise and outlier corruption are recorded in
/// the ground-truth flags.
pub fn synthesize_sequence(
    mesh: &Mesh,
    sol: &SeparatedSolution,
    mu_trajectory: &[Vec<f64>],
    camera: &CameraModel,
    camera_poses: &[RigidTransform],
    w_t_o: &RigidTransform,
    config: &SynthesisConfig,
) -> Result<SyntheticSequence> {
    if mu_trajectory.len() != camera_poses.len() {
        return Err(Error::Scenario(format!(
            "{} parameter samples vs {} camera poses",
            mu_trajectory.len(),
            camera_poses.len()
        )));
    }
    for mu in mu_trajectory {
        if !sol.pspace().contains(mu) {
            return Err(Error::Scenario(format!(
                "trajectory point {mu:?} outside the parameter box"
            )));
        }
    }
    let samples = sample_surface_points(mesh, config.n_points, config.seed)?;
    let binding = PointBinding {
        points: samples
            .iter()
            .map(|s| BoundPoint {
                id: s.id,
                element: s.element,
                natural: s.natural,
                fallback: false,
            })
            .collect(),
        rejected: Vec::new(),
    };

    let noise = Normal::new(0.0, config.noise_sigma.max(0.0))
        .map_err(|e| Error::Scenario(format!("noise model: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));

    let mut frames = Vec::with_capacity(mu_trajectory.len());
    for (index, (mu, w_t_c)) in mu_trajectory.iter().zip(camera_poses).enumerate() {
        let eval = evaluate_displacement(
            sol,
            mesh,
            &EvaluationQuery::at_bound_points(&binding, mu.clone()),
        )?;
        let cam_center = *w_t_c.translation();
        let mut measurements = Vec::new();
        for (sample, u_def) in samples.iter().zip(&eval.values) {
            let x_obj = Point3::from(sample.position.coords + u_def);
            let x_world = w_t_o.transform_point(&x_obj);
            let n_world = w_t_o.rotate_vector(&sample.normal);
            if n_world.dot(&(x_world.coords - cam_center)) >= 0.0 {
                continue; // back-facing
            }
            let Ok((u, v)) = project_point(camera, w_t_c, w_t_o, &x_obj) else {
                continue; // behind the camera
            };
            if !camera.in_bounds(u, v) {
                continue;
            }
            let is_outlier = config.outlier_fraction > 0.0
                && rng.random_range(0.0..1.0) < config.outlier_fraction;
            let (u, v) = if is_outlier {
                (
                    rng.random_range(0.0..camera.width as f64),
                    rng.random_range(0.0..camera.height as f64),
                )
            } else if config.noise_sigma > 0.0 {
                (u + noise.sample(&mut rng), v + noise.sample(&mut rng))
            } else {
                (u, v)
            };
            measurements.push(Measurement {
                point_id: sample.id,
                u,
                v,
                is_outlier,
            });
        }
        if measurements.is_empty() {
            return Err(Error::Scenario(format!(
                "frame {index}: no visible measurements"
            )));
        }
        frames.push(ObservationFrame {
            index,
            w_t_c: *w_t_c,
            measurements,
        });
    }
    Ok(SyntheticSequence {
        samples,
        binding,
        frames,
        truth_mu: mu_trajectory.to_vec(),
    })
}

impl ObservationFrame {
    /// Appends this frame to a `frame,point_id,u,v,is_outlier` CSV writer.
    pub fn write_csv_rows(&self, w: &mut impl Write) -> std::io::Result<()> {
        for m in &self.measurements {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.index, m.point_id, m.u, m.v, m.is_outlier as u8
            )?;
        }
        Ok(())
    }
}

/// Writes a full observation dump (`frame,point_id,u,v,is_outlier`).
pub fn write_observations_csv(frames: &[ObservationFrame], path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "frame,point_id,u,v,is_outlier")?;
    for f in frames {
        f.write_csv_rows(&mut w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mor::{BuildMethod, ParameterSpace, SeparatedSolution};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn block_and_solution() -> (Mesh, SeparatedSolution) {
        let mesh = Mesh::hex_block_grid(2, 2, 4, 0.08, 0.08, 0.16).unwrap();
        let ps = ParameterSpace::uniform(&[("theta", 0.0, 1.0, 5)]).unwrap();
        let mut sol = SeparatedSolution::empty(
            ps,
            mesh.node_count(),
            3,
            BuildMethod::SparsePgd,
            "block",
        );
        // smooth deformation growing linearly with the parameter
        let space = DVector::from_fn(mesh.dof_count(), |d, _| {
            let node = d / 3;
            let z = mesh.node(node).z;
            match d % 3 {
                0 => 0.2 * z * z,
                1 => 0.05 * z,
                _ => -0.02 * z,
            }
        });
        sol.push_mode(space, vec![DVector::from_vec(vec![0.0, 0.25, 0.5, 0.75, 1.0])])
            .unwrap();
        (mesh, sol)
    }

    fn looking_at_block() -> (CameraModel, RigidTransform, RigidTransform) {
        let camera = CameraModel::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        // object at the world origin; camera on the -y side looking along +y
        let w_t_o = RigidTransform::identity();
        let rot = nalgebra::Rotation3::face_towards(
            &Vector3::new(0.0, 1.0, 0.0),
            &Vector3::new(0.0, 0.0, 1.0),
        )
        .into_inner();
        let w_t_c = RigidTransform::new(rot, Vector3::new(0.04, -0.45, 0.08)).unwrap();
        (camera, w_t_o, w_t_c)
    }

    #[test]
    fn surface_sampling_is_deterministic_and_on_surface() {
        let (mesh, _) = block_and_solution();
        let a = sample_surface_points(&mesh, 50, 7).unwrap();
        let b = sample_surface_points(&mesh, 50, 7).unwrap();
        assert_eq!(a.len(), 50);
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.position, sb.position);
            // on the surface of the block
            let p = sa.position;
            let on_boundary = [p.x, p.y].iter().any(|&c| c < 1e-12 || c > 0.08 - 1e-12)
                || p.z < 1e-12
                || p.z > 0.16 - 1e-12;
            assert!(on_boundary, "sample {p:?} not on the surface");
        }
    }

    #[test]
    fn noise_free_constant_sequence_has_zero_residual() {
        let (mesh, sol) = block_and_solution();
        let (camera, w_t_o, w_t_c) = looking_at_block();
        let mu = vec![vec![0.5]; 3];
        let poses = vec![w_t_c; 3];
        let cfg = SynthesisConfig {
            n_points: 120,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            seed: 11,
        };
        let seq =
            synthesize_sequence(&mesh, &sol, &mu, &camera, &poses, &w_t_o, &cfg).unwrap();
        assert_eq!(seq.frames.len(), 3);
        // reproject the ground truth: residuals vanish
        for frame in &seq.frames {
            assert!(!frame.measurements.is_empty());
            let eval = evaluate_displacement(
                &sol,
                &mesh,
                &EvaluationQuery::at_bound_points(&seq.binding, vec![0.5]),
            )
            .unwrap();
            for m in &frame.measurements {
                let idx = seq.binding.index_of(m.point_id).unwrap();
                let x_obj =
                    Point3::from(seq.samples[idx].position.coords + eval.values[idx]);
                let (u, v) = project_point(&camera, &frame.w_t_c, &w_t_o, &x_obj).unwrap();
                assert_relative_eq!(u, m.u, epsilon = 1e-10);
                assert_relative_eq!(v, m.v, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pixel_noise_matches_expected_rms() {
        let (mesh, sol) = block_and_solution();
        let (camera, w_t_o, w_t_c) = looking_at_block();
        let frames_needed = 8; // enough frames for >= 500 measurements
        let mu = vec![vec![0.3]; frames_needed];
        let poses = vec![w_t_c; frames_needed];
        let cfg = SynthesisConfig {
            n_points: 400,
            noise_sigma: 1.0,
            outlier_fraction: 0.0,
            seed: 13,
        };
        let seq =
            synthesize_sequence(&mesh, &sol, &mu, &camera, &poses, &w_t_o, &cfg).unwrap();
        let eval = evaluate_displacement(
            &sol,
            &mesh,
            &EvaluationQuery::at_bound_points(&seq.binding, vec![0.3]),
        )
        .unwrap();
        let mut sum2 = 0.0;
        let mut count = 0usize;
        for frame in &seq.frames {
            for m in &frame.measurements {
                let idx = seq.binding.index_of(m.point_id).unwrap();
                let x_obj =
                    Point3::from(seq.samples[idx].position.coords + eval.values[idx]);
                let (u, v) = project_point(&camera, &frame.w_t_c, &w_t_o, &x_obj).unwrap();
                sum2 += (u - m.u).powi(2) + (v - m.v).powi(2);
                count += 1;
            }
        }
        assert!(count >= 500, "only {count} measurements");
        let rms = (sum2 / count as f64).sqrt();
        let expected = std::f64::consts::SQRT_2;
        assert!(
            (rms - expected).abs() / expected < 0.10,
            "rms {rms:.3} vs sigma*sqrt(2) = {expected:.3}"
        );
    }

    #[test]
    fn fixed_seed_reproduces_sequences_bitwise() {
        let (mesh, sol) = block_and_solution();
        let (camera, w_t_o, w_t_c) = looking_at_block();
        let mu = vec![vec![0.2], vec![0.6]];
        let poses = vec![w_t_c; 2];
        let cfg = SynthesisConfig {
            n_points: 80,
            noise_sigma: 0.7,
            outlier_fraction: 0.2,
            seed: 99,
        };
        let a = synthesize_sequence(&mesh, &sol, &mu, &camera, &poses, &w_t_o, &cfg).unwrap();
        let b = synthesize_sequence(&mesh, &sol, &mu, &camera, &poses, &w_t_o, &cfg).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.measurements.len(), fb.measurements.len());
            for (ma, mb) in fa.measurements.iter().zip(&fb.measurements) {
                assert_eq!(ma.u.to_bits(), mb.u.to_bits());
                assert_eq!(ma.v.to_bits(), mb.v.to_bits());
                assert_eq!(ma.is_outlier, mb.is_outlier);
            }
        }
    }

    #[test]
    fn camera_looking_away_reports_empty_frame() {
        let (mesh, sol) = block_and_solution();
        let (camera, w_t_o, _) = looking_at_block();
        // camera far on the -y side looking further away from the object
        let rot = nalgebra::Rotation3::face_towards(
            &Vector3::new(0.0, -1.0, 0.0),
            &Vector3::new(0.0, 0.0, 1.0),
        )
        .into_inner();
        let w_t_c = RigidTransform::new(rot, Vector3::new(0.0, -2.0, 0.0)).unwrap();
        let cfg = SynthesisConfig {
            n_points: 50,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            seed: 1,
        };
        let err = synthesize_sequence(
            &mesh,
            &sol,
            &[vec![0.1]],
            &camera,
            &[w_t_c],
            &w_t_o,
            &cfg,
        );
        assert!(matches!(err, Err(Error::Scenario(_))));
    }
}
