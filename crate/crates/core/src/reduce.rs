//! Order-fixed summation.
//!
//! Every reduction in the crate goes through [`stable_sum`] or
//! [`PrefixSums`]. The summation tree depends only on the input length, so
//! results are bit-identical whatever the size of the rayon pool.

use std::ops::Add;

use num_traits::Zero;
use rayon::prelude::*;

/// Leaf size of the summation tree.
pub const CHUNK: usize = 1024;

/// Recursive pairwise summation with a sequential leaf of eight terms.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Add<Output = T> + Zero,
{
    if xs.len() <= 8 {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum of `xs` as `pairwise(full chunk sums) + pairwise(tail)`.
///
/// Chunks are reduced in parallel. Because the leading chunks of a prefix are
/// the same chunks as in the full slice, `stable_sum(&xs[..n])` equals
/// `PrefixSums::new(xs).prefix(n)` bit for bit.
pub fn stable_sum<T>(xs: &[T]) -> T
where
    T: Copy + Add<Output = T> + Zero + Send + Sync,
{
    let full = xs.len() / CHUNK;
    let chunk_sums: Vec<T> = xs[..full * CHUNK]
        .par_chunks(CHUNK)
        .map(pairwise_sum)
        .collect();
    pairwise_sum(&chunk_sums) + pairwise_sum(&xs[full * CHUNK..])
}

/// Evaluates `f` over `0..len` in parallel and reduces with [`stable_sum`].
pub fn stable_map_sum<T, F>(len: usize, f: F) -> T
where
    T: Copy + Add<Output = T> + Zero + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
{
    let values: Vec<T> = (0..len).into_par_iter().map(f).collect();
    stable_sum(&values)
}

/// Chunk sums of a fixed sequence, answering prefix sums along a grid.
pub struct PrefixSums<'a, T> {
    values: &'a [T],
    chunk_sums: Vec<T>,
}

impl<'a, T> PrefixSums<'a, T>
where
    T: Copy + Add<Output = T> + Zero + Send + Sync,
{
    pub fn new(values: &'a [T]) -> Self {
        let full = values.len() / CHUNK;
        let chunk_sums = values[..full * CHUNK]
            .par_chunks(CHUNK)
            .map(pairwise_sum)
            .collect();
        Self { values, chunk_sums }
    }

    /// Sum of the first `n` values.
    pub fn prefix(&self, n: usize) -> T {
        assert!(n <= self.values.len(), "prefix beyond sequence length");
        let full = n / CHUNK;
        pairwise_sum(&self.chunk_sums[..full]) + pairwise_sum(&self.values[full * CHUNK..n])
    }
}
