//! Data-parallel map over replicate indices.
//!
//! The `parallel` feature (default) fans the map out over rayon; without it
//! the same code runs sequentially. Either way the result is the ordered
//! vector `[f(0), f(1), ..]`, so outputs are identical for any worker count.

/// Ordered map over `0..len`, parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

/// Ordered map over `0..len`, parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// The sequential reference path, always available. Used by the benches and
/// by tests that pin down `map_indexed == map_indexed_serial` bit for bit.
pub fn map_indexed_serial<T, F>(len: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Cap the rayon worker pool. A no-op without the `parallel` feature or if
/// the global pool was already initialized.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
