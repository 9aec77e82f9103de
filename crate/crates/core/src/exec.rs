//! Execution policy for the data-parallel inner loops.
//!
//! Grid evaluation and the per-constraint projections are independent across
//! points. With the `parallel` feature they run on the rayon pool; without it
//! (or with [`Exec::Sequential`]) they run on the calling thread. Reductions
//! are performed over fixed-size chunks combined in index order, so results
//! are bit-identical for every thread count and for both policies.

use serde::{Deserialize, Serialize};

/// Fixed chunk length for reductions. Independent of the thread count.
pub const REDUCE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing pool; falls back to sequential without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Configures the global pool. Only the first call has an effect.
pub fn configure_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

pub fn available_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// First index attaining the maximum of `f` over `0..len`, with NaN treated
/// as `-inf`. Returns `None` for an empty range.
pub fn argmax<F>(exec: Exec, len: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if len == 0 {
        return None;
    }
    let chunk_best = |c: usize| {
        let start = c * REDUCE_CHUNK;
        let end = (start + REDUCE_CHUNK).min(len);
        let mut best = (start, f64::NEG_INFINITY);
        for i in start..end {
            let v = f(i);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    };
    let chunks = len.div_ceil(REDUCE_CHUNK);
    let partial: Vec<(usize, f64)> = map_indexed(exec, chunks, chunk_best);
    let mut best = partial[0];
    for &p in &partial[1..] {
        if p.1 > best.1 {
            best = p;
        }
    }
    Some(best)
}

/// `(0..len).map(f).collect()`, possibly in parallel; output order is the
/// index order.
pub fn map_indexed<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Runs `f(chunk_index, chunk)` over consecutive chunks of `data` of length
/// `chunk_len` (the last may be shorter).
pub fn for_each_chunk_mut<T, F>(exec: Exec, data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    for (i, c) in data.chunks_mut(chunk_len).enumerate() {
        f(i, c);
    }
}

/// Like [`for_each_chunk_mut`] but collects one result per chunk, in chunk
/// order.
pub fn map_chunks_mut<T, R, F>(exec: Exec, data: &mut [T], chunk_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return data
            .par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    let _ = exec;
    data.chunks_mut(chunk_len)
        .enumerate()
        .map(|(i, c)| f(i, c))
        .collect()
}
