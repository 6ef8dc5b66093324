//! High-fidelity snapshot generation over the parameter domain.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::exec;
use crate::fem::{solve_static, Loads, MaterialLaw, Mesh, NewtonOptions, NodalField};
use crate::mor::ParameterSpace;
use crate::Result;

/// Boundary conditions and loads of one parameter sample.
#[derive(Debug, Clone)]
pub struct BcSample {
    /// Complete Dirichlet map for this sample (replaces the mesh's map).
    pub dirichlet: BTreeMap<usize, [f64; 3]>,
    pub loads: Loads,
}

/// Which parameter values to solve for.
#[derive(Debug, Clone)]
pub enum SamplingPlan {
    /// Every node of the tensor grid.
    FullGrid,
    /// Uniform random points inside the box (sparse sampling).
    RandomSubset { count: usize, seed: u64 },
    /// Explicit parameter values.
    Explicit(Vec<Vec<f64>>),
}

/// Set of converged high-fidelity solutions with their parameter values.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub samples: Vec<(Vec<f64>, NodalField)>,
    pub mesh_tag: String,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Solves the parameterized problem at every planned sample.
///
/// `bc_family` maps a parameter vector to the boundary conditions and loads
/// of that sample. Samples solve independently (in parallel when enabled);
/// any failure aborts with a report listing every failing parameter value.
pub fn generate_snapshots<F>(
    mesh: &Mesh,
    law: &MaterialLaw,
    bc_family: F,
    pspace: &ParameterSpace,
    plan: &SamplingPlan,
    options: &NewtonOptions,
) -> Result<SnapshotSet>
where
    F: Fn(&[f64]) -> BcSample + Sync + Send,
{
    let mus: Vec<Vec<f64>> = match plan {
        SamplingPlan::FullGrid => pspace.full_grid(),
        SamplingPlan::RandomSubset { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count)
                .map(|_| {
                    pspace
                        .axes()
                        .iter()
                        .map(|a| rng.random_range(a.lower..=a.upper))
                        .collect()
                })
                .collect()
        }
        SamplingPlan::Explicit(list) => list.clone(),
    };
    for mu in &mus {
        if !pspace.contains(mu) {
            return Err(Error::argument(format!(
                "sample {mu:?} outside the parameter box"
            )));
        }
    }

    let results = exec::map_collect(&mus, |mu| {
        let sample = bc_family(mu);
        let mut local = mesh.clone();
        local.dirichlet = sample.dirichlet;
        solve_static(&local, law, &sample.loads, options).map(|(u, _)| u)
    });

    let mut samples = Vec::with_capacity(mus.len());
    let mut failures = Vec::new();
    for (mu, result) in mus.into_iter().zip(results) {
        match result {
            Ok(u) => samples.push((mu, u)),
            Err(e) => failures.push(format!("mu = {mu:?}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Scenario(format!(
            "{} of {} snapshots failed:\n{}",
            failures.len(),
            failures.len() + samples.len(),
            failures.join("\n")
        )));
    }
    Ok(SnapshotSet {
        samples,
        mesh_tag: "generated".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    /// Hex block clamped at the bottom with its top face tilted by `theta`
    /// about a horizontal axis with azimuth `alpha` through the face center.
    pub(crate) fn tilted_block_family(
        mesh: &Mesh,
    ) -> impl Fn(&[f64]) -> BcSample + Sync + Send + '_ {
        let bottom = mesh.nodes_where(|p| p.z.abs() < 1e-12);
        let (lo, hi) = mesh.bounding_box();
        let top = mesh.nodes_where(|p| (p.z - hi.z).abs() < 1e-12);
        let center = Vector3::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y), hi.z);
        move |mu: &[f64]| {
            let (theta, alpha) = (mu[0], mu[1]);
            let axis = nalgebra::Unit::new_normalize(Vector3::new(
                alpha.cos(),
                alpha.sin(),
                0.0,
            ));
            let rot = Rotation3::from_axis_angle(&axis, theta);
            let mut dirichlet = BTreeMap::new();
            for &n in &bottom {
                dirichlet.insert(n, [0.0; 3]);
            }
            for &n in &top {
                let x = mesh.node(n).coords;
                let u = rot * (x - center) + center - x;
                dirichlet.insert(n, [u.x, u.y, u.z]);
            }
            BcSample {
                dirichlet,
                loads: Loads::none(),
            }
        }
    }

    fn block_pspace() -> ParameterSpace {
        let deg = std::f64::consts::PI / 180.0;
        ParameterSpace::uniform(&[
            ("theta", 0.0, 52.0 * deg, 11),
            ("alpha_z", -45.0 * deg, 45.0 * deg, 2),
        ])
        .unwrap()
    }

    #[test]
    fn one_parameter_grid_yields_expected_count() {
        let mesh = Mesh::hex_block_grid(2, 2, 4, 0.08, 0.08, 0.16).unwrap();
        let deg = std::f64::consts::PI / 180.0;
        let pspace = ParameterSpace::uniform(&[("theta", 0.0, 52.0 * deg, 11)]).unwrap();
        let family = {
            let f = tilted_block_family(&mesh);
            move |mu: &[f64]| f(&[mu[0], 0.0])
        };
        let law = MaterialLaw::neo_hookean(4.0e5, 1.5e5).unwrap();
        let set = generate_snapshots(
            &mesh,
            &law,
            family,
            &pspace,
            &SamplingPlan::FullGrid,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(set.len(), 11);
        // snapshots vary continuously along theta
        let mut max_gap: f64 = 0.0;
        for w in set.samples.windows(2) {
            let diff = (w[1].1.as_vector() - w[0].1.as_vector()).norm();
            max_gap = max_gap.max(diff);
        }
        assert!(max_gap > 0.0 && max_gap < 0.1, "gap {max_gap}");
    }

    #[test]
    fn degenerate_grid_solves_interval_ends() {
        let mesh = Mesh::hex_block_grid(1, 1, 2, 0.08, 0.08, 0.16).unwrap();
        let deg = std::f64::consts::PI / 180.0;
        let pspace = ParameterSpace::uniform(&[("theta", 0.0, 20.0 * deg, 2)]).unwrap();
        let family = {
            let f = tilted_block_family(&mesh);
            move |mu: &[f64]| f(&[mu[0], 0.0])
        };
        let law = MaterialLaw::neo_hookean(4.0e5, 1.5e5).unwrap();
        let set = generate_snapshots(
            &mesh,
            &law,
            family,
            &pspace,
            &SamplingPlan::FullGrid,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.samples[0].0[0], 0.0);
        assert!((set.samples[1].0[0] - 20.0 * deg).abs() < 1e-14);
        // theta = 0 snapshot is the undeformed state
        assert!(set.samples[0].1.norm() < 1e-10);
    }

    #[test]
    fn refinement_shrinks_adjacent_gaps() {
        let mesh = Mesh::hex_block_grid(1, 1, 2, 0.08, 0.08, 0.16).unwrap();
        let deg = std::f64::consts::PI / 180.0;
        let law = MaterialLaw::neo_hookean(4.0e5, 1.5e5).unwrap();
        let gap_for = |n: usize| -> f64 {
            let pspace = ParameterSpace::uniform(&[("theta", 0.0, 40.0 * deg, n)]).unwrap();
            let family = {
                let f = tilted_block_family(&mesh);
                move |mu: &[f64]| f(&[mu[0], 0.0])
            };
            let set = generate_snapshots(
                &mesh,
                &law,
                family,
                &pspace,
                &SamplingPlan::FullGrid,
                &NewtonOptions::default(),
            )
            .unwrap();
            set.samples
                .windows(2)
                .map(|w| (w[1].1.as_vector() - w[0].1.as_vector()).norm())
                .fold(0.0, f64::max)
        };
        let coarse = gap_for(5);
        let fine = gap_for(9);
        assert!(fine < coarse, "fine {fine} vs coarse {coarse}");
    }

    #[test]
    fn random_subset_stays_inside_and_is_deterministic() {
        let mesh = Mesh::hex_block_grid(1, 1, 2, 0.08, 0.08, 0.16).unwrap();
        let pspace = block_pspace();
        let law = MaterialLaw::neo_hookean(4.0e5, 1.5e5).unwrap();
        let family = tilted_block_family(&mesh);
        let plan = SamplingPlan::RandomSubset { count: 3, seed: 9 };
        let a = generate_snapshots(&mesh, &law, &family, &pspace, &plan, &NewtonOptions::default())
            .unwrap();
        let family2 = tilted_block_family(&mesh);
        let b =
            generate_snapshots(&mesh, &law, family2, &pspace, &plan, &NewtonOptions::default())
                .unwrap();
        assert_eq!(a.len(), 3);
        for ((mu_a, u_a), (mu_b, u_b)) in a.samples.iter().zip(&b.samples) {
            assert_eq!(mu_a, mu_b);
            assert_eq!(u_a.as_vector(), u_b.as_vector());
            assert!(pspace.contains(mu_a));
        }
    }
}
