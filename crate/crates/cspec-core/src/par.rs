//! Order-preserving parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) the map runs on the rayon pool;
//! without it the same call is a plain sequential map. Collection preserves
//! input order either way, so downstream reductions are deterministic.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept available for benchmarking against `par_map`.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Configure the worker count. `None` leaves the default (all cores, or the
/// `CSPEC_JOBS` environment variable when set). No-op without the `parallel`
/// feature.
pub fn configure_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        let n = jobs.or_else(|| {
            std::env::var("CSPEC_JOBS").ok().and_then(|s| s.parse::<usize>().ok())
        });
        if let Some(n) = n {
            // ignore failure: the global pool can only be built once
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
    }
}
