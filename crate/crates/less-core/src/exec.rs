//! Replica scheduling.
//!
//! Monte Carlo loops are split into fixed chunks of replica indices. Each
//! chunk is reduced sequentially by the caller's kernel; chunk results are
//! returned in index order, so the final fold is identical no matter how
//! many threads ran the chunks — or whether the `parallel` feature is
//! enabled at all.

use std::ops::Range;

/// Replicas per chunk. Small enough to load-balance, large enough that the
/// per-chunk bookkeeping is negligible next to a single sketch application.
pub const CHUNK: u64 = 64;

/// Map `f` over chunks of `0..n` and collect the per-chunk results in chunk
/// order. Runs on the rayon pool when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_chunks<R, F>(n: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<u64>) -> R + Sync,
{
    use rayon::prelude::*;
    chunk_ranges(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(f)
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<R, F>(n: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<u64>) -> R + Sync,
{
    chunk_ranges(n).map(f).collect()
}

/// Always-sequential variant, kept for benchmarks comparing the two paths.
pub fn map_chunks_seq<R, F>(n: u64, f: F) -> Vec<R>
where
    F: Fn(Range<u64>) -> R,
{
    chunk_ranges(n).map(f).collect()
}

fn chunk_ranges(n: u64) -> impl Iterator<Item = Range<u64>> {
    (0..n.div_ceil(CHUNK)).map(move |c| {
        let lo = c * CHUNK;
        lo..(lo + CHUNK).min(n)
    })
}
