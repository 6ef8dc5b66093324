//! Orthonormal mode extraction from snapshots (a posteriori reduction).

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::mor::{BuildMethod, ParameterSpace, SeparatedSolution, SnapshotSet};
use crate::Result;

/// Truncation rule for the retained basis.
#[derive(Debug, Clone, Copy)]
pub enum PodTruncation {
    /// Smallest rank capturing this fraction of singular-value energy.
    EnergyFraction(f64),
    Rank(usize),
}

/// Builds an orthonormal separated basis from snapshots of a one-parameter
/// family.
///
/// Space modes are the left singular vectors of the snapshot matrix;
/// parameter modes are the corresponding coefficient rows interpolated onto
/// the axis grid (duplicate sample values averaged, constant extrapolation
/// outside the sampled range). Multi-parameter snapshot sets are not
/// separable this way; use the alternating least-squares fit instead.
pub fn pod_basis(
    snapshots: &SnapshotSet,
    pspace: &ParameterSpace,
    truncation: PodTruncation,
) -> Result<SeparatedSolution> {
    if snapshots.is_empty() {
        return Err(Error::argument("no snapshots"));
    }
    if pspace.n_params() != 1 {
        return Err(Error::argument(
            "pod_basis supports one-parameter spaces; use fit_separated otherwise",
        ));
    }
    let n_dofs = snapshots.samples[0].1.len();
    let dim = snapshots.samples[0].1.dim();
    if snapshots
        .samples
        .iter()
        .any(|(_, u)| u.len() != n_dofs || u.dim() != dim)
    {
        return Err(Error::argument("snapshots on different meshes"));
    }
    let n = snapshots.len();

    let mut a = DMatrix::<f64>::zeros(n_dofs, n);
    for (j, (_, u)) in snapshots.samples.iter().enumerate() {
        a.set_column(j, u.as_vector());
    }
    // method of snapshots; directions below 1e-7 relative singular value are
    // numerical noise of the Gram route and dropped
    let triplets = crate::mor::gram::singular_triplets(&a, 1e-7);
    if triplets.is_empty() {
        // all-zero snapshots compress to rank 0
        return Ok(SeparatedSolution::empty(
            pspace.clone(),
            n_dofs / dim,
            dim,
            BuildMethod::Pod,
            snapshots.mesh_tag.clone(),
        ));
    }
    let total: f64 = triplets.iter().map(|(s, _, _)| s * s).sum();
    let rank = match truncation {
        PodTruncation::Rank(r) => r.min(triplets.len()),
        PodTruncation::EnergyFraction(f) => {
            let f = f.clamp(0.0, 1.0);
            let mut acc = 0.0;
            let mut r = triplets.len();
            for (i, (s, _, _)) in triplets.iter().enumerate() {
                acc += s * s;
                if acc >= f * total {
                    r = i + 1;
                    break;
                }
            }
            r
        }
    };

    let mut solution = SeparatedSolution::empty(
        pspace.clone(),
        n_dofs / dim,
        dim,
        BuildMethod::Pod,
        snapshots.mesh_tag.clone(),
    );

    // re-orthonormalize the retained left vectors (modified Gram-Schmidt);
    // coefficients then come from exact projections of the snapshots
    let mut basis: Vec<DVector<f64>> = triplets
        .into_iter()
        .take(rank)
        .map(|(_, u, _)| u)
        .collect();
    for i in 0..basis.len() {
        for j in 0..i {
            let c = basis[j].dot(&basis[i]);
            let prev = basis[j].clone();
            basis[i].axpy(-c, &prev, 1.0);
        }
        let norm = basis[i].norm();
        if norm == 0.0 {
            basis.truncate(i);
            break;
        }
        basis[i] /= norm;
    }

    // coefficient samples sorted by parameter, duplicates averaged
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        snapshots.samples[i].0[0]
            .partial_cmp(&snapshots.samples[j].0[0])
            .unwrap()
    });

    for space in basis {
        let mut xs: Vec<f64> = Vec::with_capacity(n);
        let mut cs: Vec<f64> = Vec::with_capacity(n);
        for &j in &order {
            let mu = snapshots.samples[j].0[0];
            let c = space.dot(&a.column(j).clone_owned());
            if let Some(last) = xs.last().copied() {
                if (mu - last).abs() <= 1e-14 * (1.0 + mu.abs()) {
                    // average duplicate parameter values
                    let m = cs.len();
                    cs[m - 1] = 0.5 * (cs[m - 1] + c);
                    continue;
                }
            }
            xs.push(mu);
            cs.push(c);
        }
        let grid = &pspace.axis(0).grid;
        let coeff_at = |x: f64| -> f64 {
            if x <= xs[0] {
                return cs[0];
            }
            if x >= xs[xs.len() - 1] {
                return cs[cs.len() - 1];
            }
            let seg = xs.partition_point(|&g| g <= x) - 1;
            let t = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
            (1.0 - t) * cs[seg] + t * cs[seg + 1]
        };
        let g = DVector::from_iterator(grid.len(), grid.iter().map(|&x| coeff_at(x)));
        solution.push_mode(space, vec![g])?;
    }
    Ok(solution)
}
