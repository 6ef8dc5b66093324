//! Execution strategy for data-parallel inner loops.
//!
//! Element assembly, snapshot generation, point evaluation and residual
//! stacking are all independent per item. With the `parallel` feature these
//! loops run on rayon; without it they fall back to plain iterators. Results
//! are bit-identical either way: work is mapped per item in input order and
//! every reduction happens sequentially over the collected output, so the
//! floating-point summation order never depends on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces the sequential code path even when the `parallel` feature is
/// enabled. Intended for benchmarks and determinism tests; results are
/// identical in both modes.
pub fn set_sequential(sequential: bool) {
    #[cfg(feature = "parallel")]
    FORCE_SEQUENTIAL.store(sequential, Ordering::Relaxed);
    #[cfg(not(feature = "parallel"))]
    let _ = sequential;
}

/// True when the next data-parallel loop will actually use rayon.
pub fn is_parallel() -> bool {
    #[cfg(feature = "parallel")]
    {
        !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Maps `f` over an index range, preserving index order in the output.
pub(crate) fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
