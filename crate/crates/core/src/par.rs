//! Index-ordered parallel map.
//!
//! With the `parallel` feature the work is spread over a rayon pool; without
//! it, or with `workers == 1`, items run sequentially. Results always come
//! back in index order, so callers see identical output either way.

/// Runs `f(0..count)` and returns the results in index order.
///
/// `workers == 0` uses the ambient rayon pool, `1` runs inline, and any other
/// value runs inside a dedicated pool of that size.
pub fn map_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match workers {
            1 => {}
            0 => return (0..count).into_par_iter().map(&f).collect(),
            w => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                    return pool.install(|| (0..count).into_par_iter().map(&f).collect());
                }
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    (0..count).map(f).collect()
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
