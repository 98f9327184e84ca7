//! Random streams.
//!
//! Every random quantity comes from ChaCha8, a counter-based generator: a
//! 256-bit key plus a 64-bit stream id select an independent keystream whose
//! blocks are addressed by a counter, so streams never overlap and no state is
//! shared between threads.
//!
//! Splitting rule (stable, part of the reproducibility contract):
//!
//! * the key is derived from the 64-bit master seed with `seed_from_u64`
//!   (rand_core's PCG32-based expansion);
//! * the stream id is `replicate << 8 | purpose`, where `purpose` is one of
//!   the [`Purpose`] tags below.
//!
//! Replicate `r` of an experiment therefore draws from the same numbers no
//! matter which thread runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for inside one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Gaussian innovations `W` driving the kernel convolution or core.
    Innovations = 1,
    /// Fractional noise behind a stochastic volatility.
    Volatility = 2,
    /// Independent drift components.
    Drift = 3,
    /// Scratch streams for Monte Carlo oracles and QMC shifts.
    Auxiliary = 4,
}

pub fn stream(seed: u64, replicate: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 8) | purpose as u64);
    rng
}
