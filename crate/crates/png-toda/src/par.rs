//! Batch execution helpers. With the `parallel` feature (default) batches run
//! on the rayon pool; without it everything degrades to the sequential path.
//! The sequential variants stay exported either way so benchmarks can compare
//! the two on identical inputs.

/// How to run an embarrassingly parallel batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Rayon pool when the `parallel` feature is enabled, sequential
    /// otherwise.
    #[default]
    Auto,
    Sequential,
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_batch<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => map_batch_seq(n, f),
        ExecMode::Auto => map_batch_auto(n, f),
    }
}

pub fn map_batch_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn map_batch_auto<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_batch_auto<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_batch_seq(n, f)
}

/// Caps the rayon worker count. No-op without the `parallel` feature or if a
/// global pool already exists.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}
