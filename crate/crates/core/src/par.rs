//! Thin data-parallel layer. With the `parallel` feature (default) these run on
//! the rayon global pool; without it they are plain sequential loops with the
//! same results and ordering.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f` on every index of `0..len`, preserving index order.
pub fn map_range<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Evaluate `f` on every item of `items`, preserving order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Index of the first item (in slice order) satisfying `pred`.
pub fn find_first<T, F>(items: &[T], pred: F) -> Option<usize>
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().position_first(pred)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().position(pred)
    }
}

/// Run `f(i, row)` for each mutable row.
pub fn for_each_row<T, F>(rows: Vec<&mut [T]>, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        rows.into_par_iter()
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in rows.into_iter().enumerate() {
            f(i, row);
        }
    }
}
