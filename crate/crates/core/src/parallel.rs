//! Opt-in element-level parallelism.
//!
//! Work is only distributed when a positive thread count has been configured.
//! Results are always collected in input order so that downstream accumulation
//! is bit-identical to the sequential path.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

static THREADS: AtomicUsize = AtomicUsize::new(0);

/// Configure the worker count. `0` keeps everything sequential.
pub fn set_threads(n: usize) {
    if n > 0 {
        // A global pool can only be built once; later calls just keep the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    THREADS.store(n, Ordering::SeqCst);
}

pub fn threads() -> usize {
    THREADS.load(Ordering::SeqCst)
}

pub(crate) fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    if threads() > 0 {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}
