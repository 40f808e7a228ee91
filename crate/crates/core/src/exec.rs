//! Chunked execution of independent Monte Carlo work.
//!
//! Work of `total` samples is cut into fixed-size chunks and chunk `i`
//! draws from substream `base + i`. Chunk boundaries never depend on how
//! many workers run them, and partial results are merged in chunk order,
//! so a given seed produces bit-identical output for any [`Executor`].

use alloc::vec::Vec;

use crate::sampler::RandomStream;
use crate::Result;

/// Samples per chunk.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Runs `tasks` independent closures and returns their results in task order.
pub trait Executor: Sync {
    fn map<T, F>(&self, tasks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every task on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, tasks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..tasks).map(f).collect()
    }
}

/// Disjoint families of substreams so independent parts of one estimator
/// never share random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily(pub u64);

impl StreamFamily {
    pub const LINES: Self = Self(0);
    pub const POINTS: Self = Self(1);
    pub const PAIRS: Self = Self(2);
    pub const CALIBRATION_LINES: Self = Self(3);
    pub const CALIBRATION_PAIRS: Self = Self(4);
    pub const PILOT: Self = Self(5);
    pub const AUXILIARY: Self = Self(6);

    /// Family `k` offset by a sub-index, for estimators that run several
    /// independent passes (e.g. one per dimension).
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, index: u64) -> Self {
        Self(self.0 + 16 * (index + 1))
    }

    fn stream(self, chunk: usize) -> u64 {
        (self.0 << 40) | chunk as u64
    }
}

/// Splits `total` samples into chunks, runs `work(stream, len)` for each
/// and folds the results with `merge` in chunk order.
pub fn run_chunked<A, E, W, M>(
    exec: &E,
    total: usize,
    seed: u64,
    family: StreamFamily,
    work: W,
    mut merge: M,
) -> Result<A>
where
    A: Send + Default,
    E: Executor + ?Sized,
    W: Fn(&mut RandomStream, usize) -> Result<A> + Sync,
    M: FnMut(&mut A, A),
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    let parts = exec.map(chunks, |i| {
        let len = CHUNK_SIZE.min(total - i * CHUNK_SIZE);
        let mut rng = RandomStream::new(seed, family.stream(i));
        work(&mut rng, len)
    });
    let mut acc = A::default();
    for part in parts {
        merge(&mut acc, part?);
    }
    Ok(acc)
}
