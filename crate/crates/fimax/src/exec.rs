//! Replication-parallel execution, with a sequential fallback when the
//! `parallel` feature is disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over replication indices `0..n`, collecting in index order.
///
/// With the `parallel` feature the work is distributed by rayon; the caller
/// must derive all randomness from the replication index (see `crate::rng`)
/// so both paths produce identical output.
#[cfg(feature = "parallel")]
pub fn replicate<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn replicate<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Always-sequential variant, used by benchmarks as a baseline.
pub fn replicate_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}
