use ecoplex_core::exec::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "ECOPLEX_THREADS";

/// Runs independent evaluations on a rayon pool. Results keep input order,
/// so output does not depend on the thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: Option<usize>) -> Self {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = threads.filter(|n| *n > 0) {
            builder = builder.num_threads(n);
        }
        Self {
            pool: builder.build().expect("thread pool"),
        }
    }

    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok());
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}
