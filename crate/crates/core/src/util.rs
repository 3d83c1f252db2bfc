//! Small shared helpers: deterministic RNG stream forking and the
//! sequential/parallel execution switch behind the `parallel` feature.

use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for the data-parallel inner loops.
///
/// With the `parallel` feature enabled (the default) `Exec::auto()` runs on
/// the rayon pool; without it the only variant is sequential. Benches compare
/// both on the same build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Exec {
    #[cfg(feature = "parallel")]
    pub fn auto() -> Self {
        Exec::Parallel
    }

    #[cfg(not(feature = "parallel"))]
    pub fn auto() -> Self {
        Exec::Sequential
    }
}

/// Order-preserving map over a slice, parallel when requested and available.
pub(crate) fn map_slice<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
    }
}

/// Forks a deterministic child RNG from a base seed and a stream index.
///
/// SplitMix64 finalizer over the pair, so streams are independent of the
/// order they are created in.
pub(crate) fn fork_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}
