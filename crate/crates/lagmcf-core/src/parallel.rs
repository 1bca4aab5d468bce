//! Thin wrappers around rayon so every hot loop has a sequential twin.
//!
//! The contract for determinism: per-point maps write disjoint outputs, and
//! reductions are associative merges (min/max and friends), so the parallel
//! and sequential paths produce bitwise identical results. Ordered sums are
//! always done sequentially by the callers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

/// Cap the global worker pool. `None` leaves the default. Calling this more
/// than once (or after the pool has already started) is a silent no-op, which
/// is fine for an opt-in cap read from the environment at process start.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Number of workers point loops will actually use.
pub fn effective_parallelism() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Fill `len` values by an independent per-index map.
pub(crate) fn map_points(len: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Pointwise combination of two equally long slices.
pub(crate) fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    {
        a.par_iter().zip(b.par_iter()).map(|(&x, &y)| f(x, y)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect()
    }
}

/// Run `f(row_index, row_slice)` over consecutive chunks of `row_len` values.
/// Each row is written by exactly one worker.
pub(crate) fn for_each_row(
    buf: &mut [f64],
    row_len: usize,
    f: impl Fn(usize, &mut [f64]) + Sync + Send,
) {
    debug_assert_eq!(buf.len() % row_len, 0);
    #[cfg(feature = "parallel")]
    {
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        buf.chunks_mut(row_len).enumerate().for_each(|(r, row)| f(r, row));
    }
}

/// Fallible per-index map collected in index order.
pub(crate) fn try_map_points<T: Send>(
    len: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fallible map over point indices followed by an associative merge.
///
/// `identity` must be neutral for `merge` (e.g. `+inf` for a min). The merge
/// is applied in an unspecified tree order, so callers must keep it
/// associative and commutative for bitwise reproducibility.
pub(crate) fn try_reduce_points<P>(
    len: usize,
    identity: P,
    map: impl Fn(usize) -> Result<P> + Sync + Send,
    merge: impl Fn(P, P) -> P + Sync + Send,
) -> Result<P>
where
    P: Clone + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..len)
            .into_par_iter()
            .map(map)
            .try_reduce(|| identity.clone(), |a, b| Ok(merge(a, b)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = identity;
        for p in 0..len {
            acc = merge(acc, map(p)?);
        }
        Ok(acc)
    }
}
