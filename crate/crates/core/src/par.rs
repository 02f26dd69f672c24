//! Execution strategy for data-parallel loops.
//!
//! Without the `parallel` feature every strategy runs sequentially, so callers
//! never need to guard on the feature themselves.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool; `threads = None` means the global pool.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn parallel() -> Self {
        Execution::Parallel { threads: None }
    }

    pub fn with_threads(threads: usize) -> Self {
        Execution::Parallel {
            threads: Some(threads.max(1)),
        }
    }

    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }

    /// Maps `f` over `0..n`, keeping the output in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel { threads: None } => (0..n).into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel {
                threads: Some(threads),
            } => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                Err(e) => {
                    log::warn!(
                        "could not build a {threads}-thread pool ({e}); using the global pool"
                    );
                    (0..n).into_par_iter().map(f).collect()
                }
            },
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel { .. } => (0..n).map(f).collect(),
        }
    }

    /// Fills `buf` in chunks of `chunk` elements; `f` receives the chunk index.
    pub fn fill_chunks<T, F>(self, buf: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            Execution::Sequential => buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
            #[cfg(feature = "parallel")]
            Execution::Parallel { threads } => {
                let run = |buf: &mut [T]| {
                    buf.par_chunks_mut(chunk)
                        .enumerate()
                        .for_each(|(i, c)| f(i, c))
                };
                match threads.map(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build()) {
                    Some(Ok(pool)) => pool.install(|| run(buf)),
                    _ => run(buf),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel { .. } => {
                buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c))
            }
        }
    }
}
