use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use riskpipe_core::Executor;

/// Rayon-backed executor with a fixed worker count. Results come back in
/// index order, and every replication draws from its own keyed stream, so
/// output is identical for any worker count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Self {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool");
        Parallel { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
