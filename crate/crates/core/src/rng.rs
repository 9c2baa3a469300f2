//! Seeded random number generation.
//!
//! Every random draw in the crate comes from [`SplitMix64`], a 64-bit
//! counter-based generator: the `i`-th output of a stream started at `seed`
//! is `mix(seed + (i + 1) * 0x9E3779B97F4A7C15)` with the mixing function
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! (all arithmetic wrapping mod 2^64). Derived quantities are fixed as well so
//! that any implementation can reproduce a seed bit-for-bit:
//!
//! * uniform `[0,1)`: `(x >> 11) * 2^-53`
//! * uniform `(0,1)`: `((x >> 11) + 0.5) * 2^-53`
//! * bounded integer in `[0,n)`: `(x as u128 * n as u128) >> 64`
//! * shuffle: Fisher-Yates from the last index down, `j = below(i + 1)`
//! * Laplace(0,b): `u = open01() - 0.5`, `-b * sign(u) * ln(1 - 2|u|)`
//! * sub-streams: `SplitMix64::new(mix(seed ^ mix(stream + 1)))`

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream derived from `seed` and a stream tag.
    pub fn stream(seed: u64, stream: u64) -> Self {
        Self::new(mix(seed ^ mix(stream.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn laplace(&mut self, scale: f64) -> f64 {
        let u = self.open01() - 0.5;
        -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}
