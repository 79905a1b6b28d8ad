//! Path-parallel execution with order-preserving collection.

use rayon::prelude::*;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "MSLE_WORKERS";

/// Worker count from `MSLE_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run `f` on a pool of `workers` threads (`None`: `MSLE_WORKERS`, else the
/// rayon default).
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers.or_else(workers_from_env) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// `(0..n).map(f)` in parallel, results in index order.
pub fn map_paths<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let serial: Vec<u64> = (0..100).map(|i| i * i).collect();
        for workers in [1, 3] {
            let par = with_workers(Some(workers), || {
                map_paths::<_, (), _>(100, |i| Ok(i as u64 * i as u64))
            })
            .unwrap();
            assert_eq!(par, serial);
        }
    }
}
