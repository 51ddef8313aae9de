//! Thread-count policy for element loops.
//!
//! Work is always split per element and the per-element results are
//! collected in element order, so the output is identical for every thread
//! count. One thread is the reference mode.

use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CUTMIX_THREADS";

/// Number of threads requested through [`THREADS_ENV`]; 0, absent or
/// unparsable all mean single-threaded.
pub fn configured_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads <= 1 || n < 64 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("falling back to one thread: {e}");
            (0..n).map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_thread_count() {
        let a = map_indexed(1000, 1, |i| (i as f64).sqrt());
        let b = map_indexed(1000, 4, |i| (i as f64).sqrt());
        assert_eq!(a, b);
    }
}
