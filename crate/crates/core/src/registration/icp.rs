//! Trimmed point-to-point iterative closest point with closed-form rigid
//! updates and seeded multi-start.

use nalgebra::{Matrix3, Point3, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rstar::{primitives::GeomWithData, RTree};

use crate::error::Error;
use crate::exec;
use crate::vision::{FrameTag, RigidTransform};
use crate::Result;

#[derive(Debug, Clone)]
pub struct IcpOptions {
    pub max_iterations: usize,
    /// Fraction of best correspondences kept per iteration.
    pub trim_fraction: f64,
    /// Stop when the trimmed rms stagnates below this relative change.
    pub stagnation_tol: f64,
    /// Accept the registration when the final rms is at or below this value;
    /// `None` derives 5% of the model bounding-box diagonal.
    pub accept_rms: Option<f64>,
    /// Random-rotation restarts tried when the initial guess fails.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IcpOptions {
    fn default() -> Self {
        IcpOptions {
            max_iterations: 100,
            trim_fraction: 0.9,
            stagnation_tol: 1e-8,
            accept_rms: None,
            restarts: 16,
            seed: 0,
        }
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, Default)]
pub struct IcpReport {
    /// Trimmed rms after each iteration of the accepted run.
    pub rms_history: Vec<f64>,
    pub iterations: usize,
    pub restarts_used: usize,
    pub trim_fraction: f64,
}

/// Accepted registration: the object pose in the world frame.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub w_t_o: RigidTransform,
    pub rms: f64,
    pub report: IcpReport,
}

fn centroid(points: &[Point3<f64>]) -> Vector3<f64> {
    let mut c = Vector3::zeros();
    for p in points {
        c += p.coords;
    }
    c / points.len() as f64
}

/// Closed-form rigid alignment minimizing sum |R m + t - c|^2 over the pairs
/// (cross-covariance orthogonal-factor method).
fn kabsch(model: &[Vector3<f64>], scene: &[Vector3<f64>]) -> Option<RigidTransform> {
    let n = model.len();
    if n < 3 {
        return None;
    }
    let mut m_bar = Vector3::zeros();
    let mut s_bar = Vector3::zeros();
    for (m, s) in model.iter().zip(scene) {
        m_bar += m;
        s_bar += s;
    }
    m_bar /= n as f64;
    s_bar /= n as f64;
    let mut h = Matrix3::zeros();
    for (m, s) in model.iter().zip(scene) {
        h += (s - s_bar) * (m - m_bar).transpose();
    }
    // R = V diag(1, 1, det(V U^T)) U^T with H = U S V^T computed on H^T
    let svd = h.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let d = (u * vt).determinant();
    let mut s = Matrix3::identity();
    s[(2, 2)] = d.signum();
    let rotation = u * s * vt;
    let translation = s_bar - rotation * m_bar;
    RigidTransform::new(rotation, translation).ok()
}

struct RunOutcome {
    transform: RigidTransform,
    rms: f64,
    history: Vec<f64>,
}

fn icp_run(
    tree: &RTree<GeomWithData<[f64; 3], usize>>,
    cloud: &[Point3<f64>],
    model: &[Point3<f64>],
    extent: f64,
    init: &RigidTransform,
    options: &IcpOptions,
) -> RunOutcome {
    let keep = ((options.trim_fraction.clamp(0.05, 1.0) * model.len() as f64).ceil() as usize)
        .clamp(3, model.len());
    let mut transform = *init;
    let mut history = Vec::new();
    let mut prev_rms = f64::INFINITY;
    for _ in 0..options.max_iterations {
        // correspondences under the current transform
        let moved: Vec<Point3<f64>> = exec::map_collect(model, |m| transform.transform_point(m));
        let mut pairs: Vec<(usize, usize, f64)> = exec::map_range(moved.len(), |i| {
            let p = moved[i];
            let nn = tree
                .nearest_neighbor_iter_with_distance_2([p.x, p.y, p.z])
                .next()
                .expect("cloud is non-empty");
            (i, nn.0.data, nn.1)
        });
        // keep the best correspondences; ties broken by model index
        pairs.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)));
        pairs.truncate(keep);

        let model_sel: Vec<Vector3<f64>> = pairs.iter().map(|&(i, _, _)| model[i].coords).collect();
        let scene_sel: Vec<Vector3<f64>> =
            pairs.iter().map(|&(_, j, _)| cloud[j].coords).collect();
        let Some(update) = kabsch(&model_sel, &scene_sel) else {
            break;
        };
        transform = update;

        // rms of the same trimmed set under the updated transform
        let rms = (pairs
            .iter()
            .map(|&(i, j, _)| {
                (transform.transform_point(&model[i]).coords - cloud[j].coords).norm_squared()
            })
            .sum::<f64>()
            / keep as f64)
            .sqrt();
        history.push(rms);
        // machine-zero alignment or relative stagnation ends the run
        if rms <= 1e-14 * extent
            || (prev_rms.is_finite()
                && (prev_rms - rms).abs() <= options.stagnation_tol * prev_rms.max(1e-300))
        {
            break;
        }
        prev_rms = rms;
    }
    let rms = history.last().copied().unwrap_or(f64::INFINITY);
    RunOutcome {
        transform,
        rms,
        history,
    }
}

/// Registers the model surface samples against a scene cloud: returns the
/// object pose w_T_o with its trimmed rms.
///
/// Falls back to seeded random-rotation restarts (centroid-aligned) when the
/// initial guess does not reach the acceptance rms; if no attempt does, fails
/// with the best attempt attached.
pub fn icp_register(
    cloud: &PointCloudRef<'_>,
    model: &[Point3<f64>],
    init: &RigidTransform,
    options: &IcpOptions,
) -> Result<RegistrationResult> {
    let cloud = cloud.points;
    if cloud.is_empty() || model.len() < 3 {
        return Err(Error::argument(
            "registration needs a non-empty cloud and at least 3 model points",
        ));
    }
    // acceptance threshold from the model extent when not given
    let (mut lo, mut hi) = (
        Vector3::repeat(f64::INFINITY),
        Vector3::repeat(f64::NEG_INFINITY),
    );
    for p in model {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = (hi - lo).norm();
    let accept = options.accept_rms.unwrap_or(0.05 * extent);

    let tree = RTree::bulk_load(
        cloud
            .iter()
            .enumerate()
            .map(|(i, p)| GeomWithData::new([p.x, p.y, p.z], i))
            .collect(),
    );

    let cloud_centroid = centroid(cloud);
    let model_centroid = centroid(model);
    let aligned = |rotation: Matrix3<f64>| -> RigidTransform {
        let translation = cloud_centroid - rotation * model_centroid;
        RigidTransform::new(rotation, translation).expect("proper rotation")
    };

    let mut best = icp_run(&tree, cloud, model, extent, init, options);
    let mut restarts_used = 0;
    if best.rms > accept {
        // first recovery attempt: the caller's rotation, centroid-aligned
        restarts_used += 1;
        let attempt = icp_run(&tree, cloud, model, extent, &aligned(*init.rotation()), options);
        if attempt.rms < best.rms {
            best = attempt;
        }
    }
    if best.rms > accept {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        for _ in 0..options.restarts {
            restarts_used += 1;
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let axis = if axis.norm() < 1e-9 {
                Vector3::x()
            } else {
                axis
            };
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let rotation =
                nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
                    .into_inner();
            let attempt = icp_run(&tree, cloud, model, extent, &aligned(rotation), options);
            if attempt.rms < best.rms {
                best = attempt;
            }
            if best.rms <= accept {
                break;
            }
        }
    }

    let report = IcpReport {
        iterations: best.history.len(),
        rms_history: best.history,
        restarts_used,
        trim_fraction: options.trim_fraction,
    };
    if best.rms > accept {
        return Err(Error::RegistrationFailure {
            best_rms: best.rms,
            threshold: accept,
            best: Box::new(best.transform),
        });
    }
    Ok(RegistrationResult {
        w_t_o: best.transform.with_tag(FrameTag::WorldFromObject),
        rms: best.rms,
        report,
    })
}

/// Borrowed view into cloud points (accepts [`crate::registration::PointCloud`]).
pub struct PointCloudRef<'a> {
    pub points: &'a [Point3<f64>],
}

impl<'a> From<&'a crate::registration::PointCloud> for PointCloudRef<'a> {
    fn from(c: &'a crate::registration::PointCloud) -> Self {
        PointCloudRef { points: &c.points }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::PointCloud;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Generic seeded random blob: no exact or approximate self-symmetries,
    /// so the registered pose is unique and the known-transform oracle is
    /// well-posed.
    fn model_blob() -> Vec<Point3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..300)
            .map(|_| {
                Point3::new(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..0.7),
                    rng.random_range(0.0..0.4),
                )
            })
            .collect()
    }

    fn known_transform() -> RigidTransform {
        RigidTransform::from_axis_angle(
            &Vector3::new(0.2, 1.0, -0.3),
            0.35,
            Vector3::new(0.4, -0.2, 0.7),
        )
    }

    #[test]
    fn identity_case_converges_immediately() {
        let model = model_blob();
        let cloud = PointCloud::from_points(model.clone()).unwrap();
        let result = icp_register(
            &(&cloud).into(),
            &model,
            &RigidTransform::identity(),
            &IcpOptions::default(),
        )
        .unwrap();
        let (rot_err, trans_err) = result.w_t_o.difference(&RigidTransform::identity());
        assert!(rot_err < 1e-10 && trans_err < 1e-10);
        assert!(result.rms < 1e-12);
        assert!(result.report.iterations <= 2);
    }

    #[test]
    fn exact_copy_recovers_known_transform() {
        let model = model_blob();
        let truth = known_transform();
        let cloud = PointCloud::from_points(
            model.iter().map(|p| truth.transform_point(p)).collect(),
        )
        .unwrap();
        let options = IcpOptions {
            // force restarts past local minima of the greedy descent
            accept_rms: Some(1e-9),
            ..Default::default()
        };
        let result =
            icp_register(&(&cloud).into(), &model, &RigidTransform::identity(), &options)
                .unwrap();
        let (rot_err, trans_err) = result.w_t_o.difference(&truth);
        assert!(rot_err < 1e-6, "rotation error {rot_err:.3e}");
        assert!(trans_err < 1e-6, "translation error {trans_err:.3e}");
    }

    #[test]
    fn contaminated_cloud_recovers_with_trimming() {
        let model = model_blob();
        let truth = known_transform();
        let mut pts: Vec<Point3<f64>> =
            model.iter().map(|p| truth.transform_point(p)).collect();
        // replace 20% with uniform junk around the scene
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n_bad = pts.len() / 5;
        for k in 0..n_bad {
            let idx = k * 5;
            pts[idx] = Point3::new(
                rng.random_range(-2.0..3.0),
                rng.random_range(-2.0..3.0),
                rng.random_range(-2.0..3.0),
            );
        }
        let cloud = PointCloud::from_points(pts).unwrap();
        let options = IcpOptions {
            trim_fraction: 0.7,
            accept_rms: Some(1e-6),
            ..Default::default()
        };
        let result =
            icp_register(&(&cloud).into(), &model, &RigidTransform::identity(), &options)
                .unwrap();
        let (rot_err, trans_err) = result.w_t_o.difference(&truth);
        assert!(rot_err < 1e-3, "rotation error {rot_err:.3e}");
        assert!(trans_err < 1e-3, "translation error {trans_err:.3e}");
    }

    #[test]
    fn residual_history_is_non_increasing() {
        let model = model_blob();
        let truth = known_transform();
        let cloud = PointCloud::from_points(
            model.iter().map(|p| truth.transform_point(p)).collect(),
        )
        .unwrap();
        let result = icp_register(
            &(&cloud).into(),
            &model,
            &RigidTransform::identity(),
            &IcpOptions::default(),
        )
        .unwrap();
        for w in result.report.rms_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "rms increased: {w:?}");
        }
    }

    #[test]
    fn output_rotation_is_always_proper() {
        let model = model_blob();
        // hopeless cloud far away: expect failure but a proper rotation
        let cloud = PointCloud::from_points(
            (0..40)
                .map(|i| Point3::new(100.0 + i as f64, -50.0, 3.0 * i as f64))
                .collect(),
        )
        .unwrap();
        let options = IcpOptions {
            restarts: 4,
            max_iterations: 20,
            ..Default::default()
        };
        let err = icp_register(
            &(&cloud).into(),
            &model,
            &RigidTransform::identity(),
            &options,
        )
        .unwrap_err();
        match err {
            Error::RegistrationFailure { best, .. } => {
                let r = best.rotation();
                assert_relative_eq!(
                    (r.transpose() * r - Matrix3::identity()).norm(),
                    0.0,
                    epsilon = 1e-10
                );
                assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-10);
            }
            other => panic!("expected registration failure, got {other}"),
        }
    }
}
