//! Deterministic trial scheduling.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, tag)` and
//! selected by the trial index, and results are returned in trial order.
//! Reductions over the returned vector are therefore identical for any
//! worker count, including the sequential build without the `parallel`
//! feature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Runs independent trials, on a rayon pool when the `parallel` feature is
/// on and more than one worker is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Executor {
    workers: usize,
}

impl Executor {
    /// `workers == 0` uses every available core.
    pub fn new(workers: usize) -> Self {
        Self { workers }
    }

    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Maps `f` over `0..n` and returns results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.workers != 1 {
            use rayon::prelude::*;

            let run = || (0..n).into_par_iter().map(&f).collect();
            if self.workers == 0 {
                return run();
            }
            match rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
            {
                Ok(pool) => return pool.install(run),
                Err(_) => return run(),
            }
        }
        (0..n).map(f).collect()
    }

    /// Maps `f` over trials, handing each one its own rng stream.
    pub fn trials<T, F>(&self, seed: u64, tag: u64, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut TrialRng) -> T + Sync + Send,
    {
        self.map(n, |i| {
            let mut rng = trial_rng(seed, tag, i as u64);
            f(i, &mut rng)
        })
    }
}

/// Stream `index` of the generator keyed by `(seed, tag)`.
pub fn trial_rng(seed: u64, tag: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, tag));
    rng.set_stream(index);
    rng
}

// splitmix64 finalizer over the pair
fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags, one per kind of random experiment.
pub mod tags {
    pub const UPSILON: u64 = 1;
    pub const KEYHOLE_REFERENCE: u64 = 2;
    pub const GAINS: u64 = 3;
    pub const CROSS_TERMS: u64 = 4;
    pub const ORDER_STATISTIC: u64 = 5;
    pub const SCENES: u64 = 6;
    pub const NORMALIZATION: u64 = 7;
}
