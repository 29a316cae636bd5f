//! Comparators for the streaming runs: plain and averaged SGD, and exact
//! empirical risk minimizers for the ridge and logistic families.

pub(crate) mod erm;
mod sgd;

pub use erm::{erm_fit, BOOTSTRAP_RESAMPLES, erm_logistic, erm_rate_experiment, erm_ridge, ErmRateRow, ErmRateTable, ErmSolution};
pub use sgd::{sgd_run, SgdConfig, SgdStep};

use crate::rng::SeededRng;

/// Independent per-trial generator: one key per experiment cell, then one
/// stream per trial. Trials can run in any order or thread.
pub fn trial_rng(cell_key: u64, trial: usize) -> SeededRng {
    SeededRng::new(cell_key, trial as u64)
}

pub fn thread_pool(threads: usize) -> crate::error::Result<Option<rayon::ThreadPool>> {
    if threads <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| crate::error::Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Runs `f(0..n)` serially or on `pool`, returning results in index order.
pub fn map_indexed<T, F>(pool: Option<&rayon::ThreadPool>, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match pool {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).map(f).collect(),
    }
}
