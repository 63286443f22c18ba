//! Execution policy for the data-parallel loops (model enumeration, order
//! sweeps, per-assignment certification).
//!
//! With the `parallel` feature the [`Exec::Parallel`] policy runs on the
//! rayon global pool; without it every policy runs sequentially. Results are
//! always collected in input order, so both policies produce identical
//! output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Maps `f` over a slice, returning results in slice order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Evaluates `pred` on every index in `0..n` and returns the indices where
/// it holds, ascending.
pub fn filter_range<F>(exec: Exec, n: usize, pred: F) -> Vec<usize>
where
    F: Fn(usize) -> bool + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().filter(|&i| pred(i)).collect(),
        _ => (0..n).filter(|&i| pred(i)).collect(),
    }
}

/// Returns the index in `0..n` minimising `key`, ties resolved to the
/// smallest index. `None` when `n == 0` or every key is `None`.
pub fn argmin_range<K, F>(exec: Exec, n: usize, key: F) -> Option<(usize, K)>
where
    K: Ord + Send,
    F: Fn(usize) -> Option<K> + Sync + Send,
{
    let pick = |a: Option<(usize, K)>, b: Option<(usize, K)>| match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if (&b.1, b.0) < (&a.1, a.0) {
                Some(b)
            } else {
                Some(a)
            }
        }
    };
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n)
            .into_par_iter()
            .map(|i| key(i).map(|k| (i, k)))
            .reduce(|| None, pick),
        _ => (0..n).map(|i| key(i).map(|k| (i, k))).fold(None, pick),
    }
}
