//! Deterministic Halton sample streams.

use crate::error::{Error, Result};
use crate::math::{hash_to_unit, mix64, ONE_MINUS_EPSILON};

/// Number of Halton dimensions a stream draws before switching to hashing.
pub const MAX_DIMS: usize = 32;

/// The first [`MAX_DIMS`] primes, one Halton base per dimension.
pub const PRIMES: [u32; MAX_DIMS] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
fn radical_inverse_const<const B: u64>(mut index: u64) -> f64 {
    let inv_base = 1.0 / B as f64;
    let mut reversed: u128 = 0;
    let mut inv_base_n = 1.0;
    while index > 0 {
        let next = index / B;
        let digit = index - next * B;
        reversed = reversed * B as u128 + digit as u128;
        inv_base_n *= inv_base;
        index = next;
    }
    (reversed as f64 * inv_base_n).min(ONE_MINUS_EPSILON)
}

#[inline]
fn radical_inverse_dim(dim: usize, index: u64) -> f64 {
    macro_rules! dispatch {
        ($($d:literal => $b:literal),* $(,)?) => {
            match dim {
                $($d => radical_inverse_const::<$b>(index),)*
                _ => unreachable!("dimension {dim} has no Halton base"),
            }
        };
    }
    dispatch!(
        0 => 2, 1 => 3, 2 => 5, 3 => 7, 4 => 11, 5 => 13, 6 => 17, 7 => 19, 8 => 23, 9 => 29,
        10 => 31, 11 => 37, 12 => 41, 13 => 43, 14 => 47, 15 => 53, 16 => 59, 17 => 61, 18 => 67,
        19 => 71, 20 => 73, 21 => 79, 22 => 83, 23 => 89, 24 => 97, 25 => 101, 26 => 103,
        27 => 107, 28 => 109, 29 => 113, 30 => 127, 31 => 131,
    )
}

fn radical_inverse_raw(base: u32, mut index: u64) -> f64 {
    if let Some(d) = PRIMES.iter().position(|&p| p == base) {
        return radical_inverse_dim(d, index);
    }
    let base = base as u64;
    let inv_base = 1.0 / base as f64;
    let mut reversed: u128 = 0;
    let mut inv_base_n = 1.0;
    while index > 0 {
        let next = index / base;
        let digit = index - next * base;
        reversed = reversed * base as u128 + digit as u128;
        inv_base_n *= inv_base;
        index = next;
    }
    (reversed as f64 * inv_base_n).min(ONE_MINUS_EPSILON)
}

/// Digit reversal of `index` in `base` about the radix point.
pub fn radical_inverse(base: u32, index: u64) -> Result<f64> {
    if !is_prime(base) {
        return Err(Error::contract(format!("radical inverse base {base} is not prime")));
    }
    Ok(radical_inverse_raw(base, index))
}

/// Point `index` of the Halton sequence in `dims` dimensions.
pub fn halton_point(index: u64, dims: usize) -> Result<Vec<f64>> {
    if dims > MAX_DIMS {
        return Err(Error::contract(format!("halton_point supports at most {MAX_DIMS} dimensions, got {dims}")));
    }
    Ok(PRIMES[..dims].iter().map(|&b| radical_inverse_raw(b, index)).collect())
}

/// Per-dimension toroidal shift; key 0 disables it.
#[inline]
fn shift(key: u64, dim: u32) -> f64 {
    if key == 0 {
        0.0
    } else {
        hash_to_unit(mix64(key ^ mix64(dim as u64 + 0x51_7CC1)))
    }
}

/// One consumer's view of the sample sequence at a fixed global index.
///
/// Dimension `d` of index `i` is the `d`-th Halton component of `i`, shifted
/// modulo 1 by an offset hashed from `(key, d)`. A zero key gives the plain
/// sequence. Past [`MAX_DIMS`] dimensions [`SampleStream::sample`] falls back
/// to a counter-based hash of `(key, index, dimension)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleStream {
    index: u64,
    dim: u32,
    key: u64,
}

impl SampleStream {
    pub fn new(index: u64) -> Self {
        SampleStream { index, dim: 0, key: 0 }
    }

    pub fn with_key(index: u64, key: u64) -> Self {
        SampleStream { index, dim: 0, key }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn dimension(&self) -> u32 {
        self.dim
    }

    /// Next Halton dimension; fails once the budget is exhausted.
    pub fn next(&mut self) -> Result<f64> {
        if self.dim as usize >= MAX_DIMS {
            return Err(Error::contract(format!(
                "sample stream exhausted its {MAX_DIMS} Halton dimensions"
            )));
        }
        Ok(self.sample())
    }

    /// Next dimension, hashing once the Halton budget is used up.
    #[inline]
    pub fn sample(&mut self) -> f64 {
        let d = self.dim;
        self.dim += 1;
        if (d as usize) < MAX_DIMS {
            let x = radical_inverse_dim(d as usize, self.index) + shift(self.key, d);
            if x >= 1.0 {
                (x - 1.0).min(ONE_MINUS_EPSILON)
            } else {
                x
            }
        } else {
            hash_to_unit(mix64(mix64(self.key ^ mix64(self.index)) ^ d as u64))
        }
    }

    #[inline]
    pub fn sample_2d(&mut self) -> [f64; 2] {
        [self.sample(), self.sample()]
    }

    /// Skip `n` dimensions.
    pub fn skip(&mut self, n: u32) {
        self.dim += n;
    }
}
