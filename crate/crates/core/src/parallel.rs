//! Data-parallel map-reduce with a reduction order that does not depend on the
//! number of worker threads.
//!
//! The index range is cut into fixed-size chunks. Chunks are mapped in
//! parallel, each folded sequentially, and the per-chunk partials are then
//! combined left to right. The result is bitwise reproducible for any pool
//! size.

use std::ops::Range;

use rayon::prelude::*;

/// Chunk length used by [`chunked_reduce`].
pub const CHUNK: usize = 4096;

/// Reduces each chunk of `0..len` with `fold_chunk`, then merges the chunk
/// partials in index order with `merge`, starting from `identity`.
pub fn chunked_reduce<A, F, M>(len: usize, identity: A, fold_chunk: F, merge: M) -> A
where
    A: Send,
    F: Fn(Range<usize>) -> A + Sync,
    M: Fn(A, A) -> A,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            fold_chunk(lo..(lo + CHUNK).min(len))
        })
        .collect();
    partials.into_iter().fold(identity, merge)
}

/// Parallel map over `0..len` that preserves index order.
pub fn ordered_map<A, F>(len: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize) -> A + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}
