//! Storage compression and accuracy metrics of separated solutions.

use crate::error::Error;
use crate::mor::{SeparatedSolution, SnapshotSet};
use crate::Result;

/// Compression factor C(%) = (1 - M_P / M_O) * 100 for storage costs counted
/// in scalars.
pub fn compression_percent(m_p: u64, m_o: u64) -> Result<f64> {
    if m_o == 0 {
        return Err(Error::argument("reference storage must be nonzero"));
    }
    Ok((1.0 - m_p as f64 / m_o as f64) * 100.0)
}

/// Scalars stored by the separated solution: all space and parameter modes.
pub fn solution_storage_scalars(sol: &SeparatedSolution) -> u64 {
    let space = sol.rank() as u64 * (sol.node_count() * sol.space_dim()) as u64;
    let params: u64 = (0..sol.pspace().n_params())
        .map(|k| (sol.rank() * sol.pspace().grid_size(k)) as u64)
        .sum();
    space + params
}

/// Scalars needed to store the full solution tensor over the whole grid.
pub fn full_grid_scalars(sol: &SeparatedSolution) -> u64 {
    let grid: u64 = (0..sol.pspace().n_params())
        .map(|k| sol.pspace().grid_size(k) as u64)
        .product();
    (sol.node_count() * sol.space_dim()) as u64 * grid
}

/// Scalars stored by a snapshot set.
pub fn snapshot_storage_scalars(set: &SnapshotSet) -> u64 {
    set.samples.iter().map(|(_, u)| u.len() as u64).sum()
}

/// Compression of a solution against a reference storage cost in scalars.
pub fn compression_factor(sol: &SeparatedSolution, reference_scalars: u64) -> Result<f64> {
    compression_percent(solution_storage_scalars(sol), reference_scalars)
}

/// One point of the error-versus-rank curve.
#[derive(Debug, Clone, Copy)]
pub struct ModeErrorPoint {
    pub rank: usize,
    /// Mean Euclidean nodal displacement error over all oracle samples.
    pub mean_error: f64,
    /// Mean error divided by the largest displacement magnitude in the
    /// oracle.
    pub normalized: f64,
}

/// Mean 3D displacement error of every rank-r truncation against an oracle
/// snapshot set, for r = 1..=max_rank.
pub fn mode_error_curve(
    sol: &SeparatedSolution,
    oracle: &SnapshotSet,
    max_rank: usize,
) -> Result<Vec<ModeErrorPoint>> {
    if oracle.is_empty() {
        return Err(Error::argument("empty oracle"));
    }
    let dim = sol.space_dim();
    let nodes = sol.node_count();
    let mut max_mag = 0.0_f64;
    for (_, u) in &oracle.samples {
        if u.len() != nodes * dim {
            return Err(Error::argument("oracle on a different mesh"));
        }
        max_mag = max_mag.max(u.max_node_norm());
    }

    let mut curve = Vec::new();
    for rank in 1..=max_rank.min(sol.rank()) {
        let t = sol.truncated(rank);
        let mut total = 0.0;
        for (mu, u) in &oracle.samples {
            let approx = t.evaluate_at_nodes(mu);
            for n in 0..nodes {
                let mut d2 = 0.0;
                for c in 0..dim {
                    let e = approx[n * dim + c] - u.as_vector()[n * dim + c];
                    d2 += e * e;
                }
                total += d2.sqrt();
            }
        }
        let mean = total / (nodes * oracle.len()) as f64;
        curve.push(ModeErrorPoint {
            rank,
            mean_error: mean,
            normalized: if max_mag > 0.0 { mean / max_mag } else { 0.0 },
        });
    }
    Ok(curve)
}
