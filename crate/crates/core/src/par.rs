//! Ordered data-parallel map over an index range.
//!
//! With the `parallel` feature the work is spread by rayon; without it (or
//! with [`Execution::Sequential`]) everything runs on the calling thread.
//! Output order always follows the index order, so results are identical
//! for every execution choice.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Rayon global pool.
    #[default]
    Parallel,
    /// Dedicated rayon pool of this many threads.
    Threads(usize),
}

impl Execution {
    /// `None` and `Some(0)` mean the global pool, `Some(1)` sequential.
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            None | Some(0) => Execution::Parallel,
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Threads(n),
        }
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_ordered<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        #[cfg(feature = "parallel")]
        Execution::Threads(threads) => {
            use rayon::prelude::*;
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                Err(_) => (0..n).map(f).collect(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel | Execution::Threads(_) => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_every_execution() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let seq = map_ordered(1000, Execution::Sequential, f);
        for exec in [Execution::Parallel, Execution::Threads(3)] {
            assert_eq!(map_ordered(1000, exec, f), seq);
        }
    }
}
