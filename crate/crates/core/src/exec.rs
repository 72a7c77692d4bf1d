//! Execution kernel: data-parallel maps with a sequential fallback.
//!
//! With the `parallel` feature (default), per-item work is distributed with
//! rayon but results are reassembled in input order, so every downstream
//! float accumulation sees terms in the same sequence regardless of thread
//! count. Without the feature the same functions run sequentially with
//! identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Maps `f` (producing a `Vec` per item) over `items` and concatenates the
/// results in input order. Parallelism happens per item; the flatten is
/// always sequential, so concatenation order is fixed.
pub fn flat_map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Vec<U> + Sync + Send,
{
    let nested = map_ordered(items, f);
    let total = nested.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    for v in nested {
        out.extend(v);
    }
    out
}
