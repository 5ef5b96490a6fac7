use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted modulus. Elements are stored as `u64` below the modulus,
/// so products of two elements fit in a `u64` without widening.
pub const MAX_MODULUS: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of range (need 2 <= p < 2^31)")]
    ModulusOutOfRange(u64),
    #[error("field of size {modulus} too small: need at least {needed} elements")]
    FieldTooSmall { modulus: u64, needed: u64 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("linear system has no solution")]
    NoSolution,
    #[error("matrix is singular")]
    Singular,
}

/// The prime field GF(p). Elements are plain `u64` values in `[0, p)`;
/// the field value itself is a small copyable context passed to operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeField {
    modulus: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

impl PrimeField {
    /// Constructs GF(p), verifying primality.
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if !(2..MAX_MODULUS).contains(&modulus) {
            return Err(FieldError::ModulusOutOfRange(modulus));
        }
        if !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(PrimeField { modulus })
    }

    /// GF(p) for the smallest prime `p >= n`. This is the library default
    /// when a code needs `n` distinct star scalars.
    pub fn smallest_prime_at_least(n: u64) -> Result<Self, FieldError> {
        let mut p = n.max(2);
        while !is_prime(p) {
            p += 1;
            if p >= MAX_MODULUS {
                return Err(FieldError::ModulusOutOfRange(p));
            }
        }
        PrimeField::new(p)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn reduce(&self, x: u64) -> u64 {
        x % self.modulus
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(a, self.modulus - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Maps a signed sign (`+1`/`-1` style parity) onto the field.
    pub fn sign(&self, negative: bool) -> u64 {
        if negative {
            self.neg(1)
        } else {
            1
        }
    }
}
