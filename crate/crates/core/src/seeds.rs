//! Deterministic seed derivation.
//!
//! Simulation seeds are a pure function of the master seed and the
//! task's coordinates, so results never depend on which worker ran a task
//! or in which order tasks completed.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of coordinates into a new 64-bit seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Stream tags keeping the different consumers of a master seed apart.
pub mod stream {
    pub const PRIOR: u64 = 1;
    pub const PROPOSAL: u64 = 2;
    pub const SIMULATION: u64 = 3;
    pub const ACCEPT: u64 = 4;
    pub const PREDICT: u64 = 5;
}
