//! Prime-field arithmetic, polynomials over `F_q`, interpolation and
//! Reed-Solomon style error decoding.
//!
//! Everything here is pure: a [`FieldCtx`] is a copyable value and may be
//! shared freely across threads.

mod bw;
mod embed;
mod linalg;
mod poly;

pub use bw::bw_decode;
pub use embed::{ProductBound, RealEmbedding};
pub use linalg::{invert, solve};
pub use poly::{interpolate, InterpolationBasis, Poly};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mersenne prime 2^31 - 1.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

/// A canonical residue in `[0, q)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct FieldElem(u64);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub const fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Arithmetic context for `F_q`, `q` prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    q: u64,
    /// Number of full-width products that can be summed in a `u128` before a
    /// reduction is required.
    lazy_terms: usize,
}

impl Default for FieldCtx {
    fn default() -> Self {
        FieldCtx::new(DEFAULT_MODULUS).expect("default modulus is prime")
    }
}

impl FieldCtx {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        let max_product = ((q - 1) as u128) * ((q - 1) as u128);
        let lazy_terms = if max_product == 0 {
            usize::MAX
        } else {
            usize::try_from(u128::MAX / max_product).unwrap_or(usize::MAX).max(1)
        };
        Ok(FieldCtx { q, lazy_terms })
    }

    #[inline]
    pub const fn modulus(&self) -> u64 {
        self.q
    }

    /// `log2 q`, the information content of one element.
    pub fn log2_q(&self) -> f64 {
        (self.q as f64).log2()
    }

    /// Bits needed to store one canonical element.
    pub fn element_bits(&self) -> u32 {
        64 - (self.q - 1).leading_zeros()
    }

    /// Bytes used for one element on the wire.
    pub fn element_bytes(&self) -> usize {
        (self.element_bits() as usize).div_ceil(8)
    }

    /// Reduces an arbitrary integer.
    #[inline]
    pub fn elem(&self, value: u64) -> FieldElem {
        FieldElem(value % self.q)
    }

    /// Accepts only canonical values.
    pub fn try_elem(&self, value: u64) -> Result<FieldElem> {
        if value < self.q {
            Ok(FieldElem(value))
        } else {
            Err(Error::NonCanonical { value, q: self.q })
        }
    }

    /// Signed integer to its residue; negative `v` maps to `q - |v| mod q`.
    pub fn from_i64(&self, value: i64) -> FieldElem {
        let r = (value as i128).rem_euclid(self.q as i128);
        FieldElem(r as u64)
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let (s, overflow) = a.0.overflowing_add(b.0);
        if overflow || s >= self.q {
            FieldElem(s.wrapping_sub(self.q))
        } else {
            FieldElem(s)
        }
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.0 >= b.0 {
            FieldElem(a.0 - b.0)
        } else {
            FieldElem(self.q - (b.0 - a.0))
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        if a.0 == 0 {
            a
        } else {
            FieldElem(self.q - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(((a.0 as u128 * b.0 as u128) % self.q as u128) as u64)
    }

    /// `a^e` by square-and-multiply, with `0^0 = 1`.
    pub fn pow(&self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem(1 % self.q);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `sum a_i * b_i` with lazy reduction of the wide accumulator.
    pub fn dot(&self, a: &[FieldElem], b: &[FieldElem]) -> FieldElem {
        debug_assert_eq!(a.len(), b.len());
        let q = self.q as u128;
        let mut total: u128 = 0;
        for (ca, cb) in a.chunks(self.lazy_terms).zip(b.chunks(self.lazy_terms)) {
            let mut acc: u128 = 0;
            for (x, y) in ca.iter().zip(cb) {
                acc += x.0 as u128 * y.0 as u128;
            }
            total = (total + acc % q) % q;
        }
        FieldElem(total as u64)
    }

    /// `acc += c * x` elementwise.
    pub fn axpy(&self, acc: &mut [FieldElem], c: FieldElem, x: &[FieldElem]) {
        debug_assert_eq!(acc.len(), x.len());
        if c.is_zero() {
            return;
        }
        for (a, &v) in acc.iter_mut().zip(x) {
            *a = self.add(*a, self.mul(c, v));
        }
    }

    /// Uniformly random element.
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        FieldElem(rng.random_range(0..self.q))
    }

    /// Uniformly random nonzero element.
    pub fn random_nonzero<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        FieldElem(rng.random_range(1..self.q))
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
