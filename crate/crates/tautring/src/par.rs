//! Thin switch between the rayon-backed data-parallel path and a sequential
//! fallback.  Callers ask for parallelism; whether it actually happens depends
//! on the `parallel` feature and the flag.  Results are identical either way:
//! work items are indexed and outputs are collected in index order.

/// Applies `f` to every index in `0..len`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    if parallel && len > 1 {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// Applies `f` to every index in `0..len`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, _parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..len).map(f).collect()
}
