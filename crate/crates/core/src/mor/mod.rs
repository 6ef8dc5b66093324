//! Offline model-order reduction: separated parametric solutions.
//!
//! Three builders produce [`SeparatedSolution`] objects:
//!
//! - [`pgd_build`]: a priori alternating-direction enrichment for the linear
//!   parametric problem with a separated load (no snapshots needed);
//! - [`fit_separated`]: greedy rank-one alternating least squares over
//!   snapshots of the nonlinear problem (a sparse, non-intrusive variant);
//! - [`pod_basis`]: singular value decomposition of a snapshot matrix.
//!
//! Compression and mode-error metrics quantify what the separated form costs
//! in accuracy and saves in storage.

mod als;
mod gram;
mod load_sep;
mod metrics;
mod pgd;
mod pod;
mod pspace;
mod separated;
mod snapshots;

pub use als::{fit_separated, FitOptions, FitReport};
pub use load_sep::{separate_delta_load, separate_load, SeparatedLoad};
pub use metrics::{
    compression_factor, compression_percent, full_grid_scalars, mode_error_curve,
    snapshot_storage_scalars, solution_storage_scalars, ModeErrorPoint,
};
pub use pgd::{pgd_build, PgdOptions};
pub use pod::{pod_basis, PodTruncation};
pub use pspace::{ParamAxis, ParameterSpace};
pub use separated::{BuildMethod, SeparatedSolution};
pub use snapshots::{generate_snapshots, BcSample, SamplingPlan, SnapshotSet};
