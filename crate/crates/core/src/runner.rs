//! Parallel execution of independent replicas.
//!
//! Results always come back in replica order, whatever the thread count, so
//! every downstream reduction sees the same sequence. Run inside a
//! `rayon::ThreadPool::install` to bound the worker count.

use rayon::prelude::*;

use crate::error::Result;

/// `f(0), f(1), …, f(replicas − 1)`, evaluated in parallel.
pub fn map_replicas<T, F>(replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .with_min_len(16)
        .map(|r| f(r as u64))
        .collect()
}

/// Like [`map_replicas`], stopping at the first error in replica order.
pub fn try_map_replicas<T, F>(replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    map_replicas(replicas, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_across_pool_sizes() {
        let expect: Vec<u64> = (0..1000).map(|r| r * r).collect();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let got = pool.install(|| map_replicas(1000, |r| r * r));
            assert_eq!(got, expect);
        }
    }
}
