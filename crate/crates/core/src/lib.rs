//! Multi-server coded caching simulator.
//!
//! A broadcast caching network has `N` files of `F` bits, `K` users each
//! holding a cache of `M·F` bits, and `L` servers that all store the whole
//! library. Content is placed in the caches before demands are known; once
//! every user announces one file, the servers transmit coded symbols over
//! GF(2^m) until every user can reconstruct its file bit-exactly from its
//! cache plus what it received. The figure of merit is the coding delay: how
//! many time slots the parallel transmission takes, in units of `F/m` slots.
//!
//! The crate provides
//!
//! * [`gf`] — the GF(2^m) arithmetic the delivery phase is coded over,
//! * [`model`] — scenario parameters, file catalogs, split plans, caches and
//!   the three network topologies (dedicated lines, flexible switch, linear),
//! * [`bounds`] — exact rational delay formulas, corner enumeration and the
//!   cut-set lower bound,
//! * [`scheme`] — placement / delivery / decode for the four schemes
//!   (single-server reference, dedicated, flexible, linear),
//! * [`harness`] — end-to-end scenario runs, memory sweeps, the reference
//!   scenario checks and CSV report emission.
//!
//! Everything is deterministic given the scenario seed, and every delay or
//! memory comparison is done in exact rational arithmetic — there are no
//! floating-point tolerances anywhere.

pub mod bounds;
pub mod combin;
pub mod gf;
pub mod harness;
pub mod model;
pub mod scheme;

use rand::SeedableRng;

/// Exact rational number used for memories, delays and bounds. All
/// comparisons in the crate are exact; nothing is ever rounded to floats.
pub type Rational = num_rational::BigRational;

/// Rational from an integer numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Rational from an unsigned integer.
pub fn rat_int(v: u128) -> Rational {
    Rational::from_integer(v.into())
}

/// The deterministic RNG used everywhere randomness is needed. Identical
/// seeds reproduce identical catalogs, transfer matrices and coefficient
/// draws on every platform.
pub type SimRng = rand_chacha::ChaCha12Rng;

/// Purposes that draw randomness, each on its own ChaCha stream so that,
/// e.g., resampling the transfer matrix never shifts the catalog bytes.
#[derive(Copy, Clone, Debug)]
pub enum RngStream {
    Catalog = 0,
    TransferMatrix = 1,
    Precoder = 2,
    Coefficients = 3,
    Demands = 4,
}

/// RNG for one (seed, stream) pair.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RNG for a named purpose under a scenario seed.
pub fn rng_for(seed: u64, purpose: RngStream) -> SimRng {
    rng_stream(seed, purpose as u64)
}

/// Stable per-point seed derivation for sweeps (SplitMix64 step), so sweep
/// points are independently reproducible regardless of execution order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
