//! Order-preserving parallel map with a sequential fallback.
//!
//! With the `parallel` feature the map runs on a scoped rayon pool; without
//! it every mode runs sequentially. Results always come back in input order,
//! so outputs do not depend on the worker count.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// `0` means one worker per logical CPU.
    Threads(usize),
    #[default]
    Auto,
}

impl Parallelism {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None => Parallelism::Auto,
            Some(0) | Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Threads(n),
        }
    }

    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Parallelism::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Threads(n) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(e) => {
                        log::warn!("thread pool unavailable ({e}); running sequentially");
                        items.iter().map(f).collect()
                    }
                }
            }
            #[cfg(feature = "parallel")]
            Parallelism::Auto => {
                use rayon::prelude::*;
                items.par_iter().map(&f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.iter().map(f).collect(),
        }
    }
}
