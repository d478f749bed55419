//! Deterministic parallel map over trajectory indices.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `f(0..n)` on a work-stealing pool and returns the results in
/// index order. `workers = None` uses the global pool.
pub fn par_map_indexed<S, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<S>>
where
    S: Send,
    F: Fn(usize) -> Result<S> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<S>>>();
    match workers {
        None => run(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(run)
        }
    }
}
