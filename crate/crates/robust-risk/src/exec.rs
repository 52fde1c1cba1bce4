//! Deterministic data-parallel reductions.
//!
//! Sums are split into fixed-size chunks, each chunk is accumulated in index
//! order, and the chunk partials are combined by a balanced pairwise tree.
//! Chunk boundaries do not depend on the thread count, so sequential and
//! parallel runs produce bit-identical results.

use std::cell::Cell;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of consecutive terms accumulated before entering the tree.
pub const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

thread_local! {
    static MODE: Cell<ExecMode> = Cell::new(ExecMode::default());
}

/// Execution mode used by reductions started on the current thread.
pub fn mode() -> ExecMode {
    MODE.with(|m| m.get())
}

/// Run `f` with reductions on this thread forced to `mode`.
pub fn with_mode<R>(mode: ExecMode, f: impl FnOnce() -> R) -> R {
    let prev = MODE.with(|m| m.replace(mode));
    let out = f();
    MODE.with(|m| m.set(prev));
    out
}

fn parallel_enabled(n_chunks: usize) -> bool {
    cfg!(feature = "parallel") && mode() == ExecMode::Parallel && n_chunks > 1
}

/// Deterministic sum of `K` parallel series `f(0) + ... + f(n-1)`.
pub fn sum_by<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let chunk = |c: usize| {
        let mut acc = [0.0; K];
        for i in c * CHUNK..n.min((c + 1) * CHUNK) {
            let t = f(i);
            for k in 0..K {
                acc[k] += t[k];
            }
        }
        acc
    };
    let parts: Vec<[f64; K]> = if parallel_enabled(n_chunks) {
        #[cfg(feature = "parallel")]
        {
            (0..n_chunks).into_par_iter().map(chunk).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            unreachable!()
        }
    } else {
        (0..n_chunks).map(chunk).collect()
    };
    tree_sum(&parts)
}

/// Deterministic sum of a single series.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_by::<1, _>(n, |i| [f(i)])[0]
}

fn tree_sum<const K: usize>(parts: &[[f64; K]]) -> [f64; K] {
    match parts.len() {
        0 => [0.0; K],
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            let (a, b) = (tree_sum(l), tree_sum(r));
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = a[k] + b[k];
            }
            out
        }
    }
}

/// Ordered map over `0..n`, parallel when enabled.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel_enabled(n) {
        #[cfg(feature = "parallel")]
        {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e3 + 1.0 / (i as f64 + 1.0);
        let n = 100_003;
        let a = with_mode(ExecMode::Sequential, || sum(n, f));
        let b = with_mode(ExecMode::Parallel, || sum(n, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn multi_series_sum() {
        let s = sum_by::<2, _>(1000, |i| [1.0, i as f64]);
        assert_eq!(s, [1000.0, 499_500.0]);
        assert_eq!(sum(0, |_| 1.0), 0.0);
    }

    #[test]
    fn ordered_map() {
        let v = map(10, |i| i * i);
        assert_eq!(v, (0..10).map(|i| i * i).collect::<Vec<_>>());
    }
}
