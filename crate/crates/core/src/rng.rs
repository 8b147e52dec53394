//! Keyed random streams and the indexed-map executor used by every Monte
//! Carlo routine.
//!
//! A replicate, draw or path with index `i` always consumes the ChaCha stream
//! selected by `(seed, i)`, so results do not depend on how work is scheduled.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type KeyedRng = ChaCha8Rng;

/// The generator for work item `index` under `seed`.
pub fn keyed_rng(seed: u64, index: u64) -> KeyedRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(0..len)` and returns the results in index order.
pub trait Executor {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
