//! Stateless counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed, a
//! domain tag and one or two integer coordinates. Configurations sampled in
//! different windows therefore agree on every vertex they share, and edge
//! uniforms do not depend on the order in which pairs are visited.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const KEY_A: u64 = 0xD6E8_FEB8_6659_FD93;
const KEY_B: u64 = 0xA076_1D64_78BD_642F;

/// Domain tags keep the streams used for different purposes independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Mark = 1,
    Gap = 2,
    Site = 3,
    Pair = 4,
    Layered = 5,
    FiniteLocation = 6,
    FiniteMark = 7,
    Replica = 8,
    MonteCarlo = 9,
    Crossing = 10,
}

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn hash(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN.wrapping_mul(domain as u64 + 1)));
    h = mix64(h ^ a.wrapping_mul(KEY_A));
    mix64(h.wrapping_add(GOLDEN) ^ b.wrapping_mul(KEY_B))
}

/// Maps 64 random bits to a double in the open interval (0, 1).
#[inline]
pub fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
pub fn uniform(seed: u64, domain: Domain, a: u64, b: u64) -> f64 {
    to_open_unit(hash(seed, domain, a, b))
}

/// Seed for replica `replica` of grid point `grid` under `master`.
pub fn derive_seed(master: u64, grid: u64, replica: u64) -> u64 {
    hash(master, Domain::Replica, grid, replica)
}

/// A SplitMix64 sequence whose starting state is a keyed hash.
#[derive(Clone, Debug)]
pub struct CounterStream {
    state: u64,
}

impl CounterStream {
    pub fn new(seed: u64, domain: Domain, a: u64, b: u64) -> Self {
        Self {
            state: hash(seed, domain, a, b),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        to_open_unit(self.next_u64())
    }
}
