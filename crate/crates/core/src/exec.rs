use crate::prelude::*;

/// Runs independent, index-addressed tasks and returns results in index order.
///
/// Implementations may evaluate tasks in any order or concurrently, but the
/// returned vector is always ordered by index, so reductions over it are
/// identical for every implementation.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
