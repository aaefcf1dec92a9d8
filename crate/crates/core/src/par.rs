//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (default) items are processed on the rayon
//! pool; without it they run sequentially. Output order always matches input
//! order and every item carries its own RNG stream, so results are identical
//! in both modes and for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Seed for work item `index` under `master`: SplitMix64 applied to
/// `master + (index + 1) * 0x9e3779b97f4a7c15`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps `f` over `0..n`, in parallel when the feature is enabled.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference path of [`map_indexed`].
pub fn map_indexed_sequential<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Whether [`map_indexed`] runs on the rayon pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
