//! Worker-count plumbing around rayon.
//!
//! Results are always collected in index order, so outputs do not depend on
//! the number of workers.

use rayon::prelude::*;

/// Run `f` inside a pool of `workers` threads; `workers <= 1` runs inline.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not build a {workers}-thread pool ({e}); running inline");
            f()
        }
    }
}

/// `(0..n).map(f)`, in parallel when the current pool has more than one thread.
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if rayon::current_num_threads() > 1 && rayon::current_thread_index().is_some() {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}
