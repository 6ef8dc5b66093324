//! Parameter-space definition and 1D grid interpolation.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One parameter dimension with its 1D interpolation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamAxis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub grid: Vec<f64>,
}

/// Box-shaped parameter domain with a finite-element style 1D grid per
/// dimension; fields over the grid are interpolated piecewise linearly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterSpace {
    axes: Vec<ParamAxis>,
}

impl ParameterSpace {
    /// Validates bounds and grids: lower < upper, at least two strictly
    /// increasing grid nodes spanning exactly [lower, upper].
    pub fn from_axes(axes: Vec<ParamAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::argument("parameter space needs at least one axis"));
        }
        for axis in &axes {
            if !(axis.lower < axis.upper) {
                return Err(Error::argument(format!(
                    "axis {}: lower {} must be < upper {}",
                    axis.name, axis.lower, axis.upper
                )));
            }
            if axis.grid.len() < 2 {
                return Err(Error::argument(format!(
                    "axis {}: grid needs at least 2 nodes",
                    axis.name
                )));
            }
            if axis.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::argument(format!(
                    "axis {}: grid must be strictly increasing",
                    axis.name
                )));
            }
            let spans = (axis.grid[0] - axis.lower).abs() < 1e-12 * axis.span().max(1.0)
                && (axis.grid[axis.grid.len() - 1] - axis.upper).abs()
                    < 1e-12 * axis.span().max(1.0);
            if !spans {
                return Err(Error::argument(format!(
                    "axis {}: grid must span [{}, {}]",
                    axis.name, axis.lower, axis.upper
                )));
            }
        }
        Ok(ParameterSpace { axes })
    }

    /// Uniform grids from (name, lower, upper, grid_size) tuples.
    pub fn uniform(specs: &[(&str, f64, f64, usize)]) -> Result<Self> {
        let axes = specs
            .iter()
            .map(|&(name, lower, upper, size)| {
                let n = size.max(2);
                ParamAxis {
                    name: name.to_string(),
                    lower,
                    upper,
                    grid: (0..n)
                        .map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64)
                        .collect(),
                }
            })
            .collect();
        Self::from_axes(axes)
    }

    pub fn n_params(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[ParamAxis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &ParamAxis {
        &self.axes[k]
    }

    pub fn grid_size(&self, k: usize) -> usize {
        self.axes[k].grid.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.axes.len()
            && self
                .axes
                .iter()
                .zip(mu)
                .all(|(a, &x)| x >= a.lower && x <= a.upper)
    }

    /// Clamps a parameter vector into the box; returns whether any component
    /// moved.
    pub fn clamp(&self, mu: &[f64]) -> (Vec<f64>, bool) {
        let mut clamped = false;
        let out = self
            .axes
            .iter()
            .zip(mu)
            .map(|(a, &x)| {
                let c = x.clamp(a.lower, a.upper);
                if c != x {
                    clamped = true;
                }
                c
            })
            .collect();
        (out, clamped)
    }

    /// Locates `x` on axis `k`: segment index and local coordinate in [0, 1].
    ///
    /// Values at interior knots belong to the right segment; the upper bound
    /// belongs to the last segment. Out-of-range values are clamped.
    pub fn locate(&self, k: usize, x: f64) -> (usize, f64) {
        let grid = &self.axes[k].grid;
        let last = grid.len() - 1;
        if x <= grid[0] {
            return (0, 0.0);
        }
        if x >= grid[last] {
            return (last - 1, 1.0);
        }
        // partition_point returns the first index with grid[i] > x
        let seg = grid.partition_point(|&g| g <= x) - 1;
        let seg = seg.min(last - 1);
        let t = (x - grid[seg]) / (grid[seg + 1] - grid[seg]);
        (seg, t)
    }

    /// Piecewise-linear interpolation of a grid function on axis `k`.
    pub fn interp(&self, k: usize, values: &[f64], x: f64) -> f64 {
        let (seg, t) = self.locate(k, x);
        (1.0 - t) * values[seg] + t * values[seg + 1]
    }

    /// Derivative of the piecewise-linear interpolant: the slope of the
    /// segment selected by [`ParameterSpace::locate`] (right segment at
    /// interior knots, left segment at the upper bound).
    pub fn interp_derivative(&self, k: usize, values: &[f64], x: f64) -> f64 {
        let (seg, _) = self.locate(k, x);
        let grid = &self.axes[k].grid;
        (values[seg + 1] - values[seg]) / (grid[seg + 1] - grid[seg])
    }

    /// Full tensor grid in lexicographic order (first axis slowest).
    pub fn full_grid(&self) -> Vec<Vec<f64>> {
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(points.len() * axis.grid.len());
            for p in &points {
                for &g in &axis.grid {
                    let mut q = p.clone();
                    q.push(g);
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

impl ParamAxis {
    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }
}
