//! Exact arithmetic over prime fields GF(q) and the small dense matrices
//! used for rank computations.
//!
//! Only prime moduli are supported; extension fields are out of scope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("division by zero in GF({0})")]
    DivisionByZero(u64),
}

/// Deterministic trial-division primality check. Moduli here are tiny
/// (the paper works over GF(3)), so nothing fancier is warranted.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of GF(q) for prime q, with the modulus carried alongside the
/// value so that mixed-field arithmetic is rejected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn new(value: u64, modulus: u64) -> Result<Self, FieldError> {
        if !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self {
            value: value % modulus,
            modulus,
        })
    }

    pub fn zero(modulus: u64) -> Result<Self, FieldError> {
        Self::new(0, modulus)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(Self {
            value: (self.value + other.value) % self.modulus,
            modulus: self.modulus,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(Self {
            value: (self.modulus + self.value - other.value) % self.modulus,
            modulus: self.modulus,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(Self {
            value: mul_mod(self.value, other.value, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero(self.modulus));
        }
        Ok(Self {
            value: inv_mod(self.value, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            value: (self.modulus - self.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

pub(crate) fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    (a + b) % q
}

pub(crate) fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    (q + a % q - b % q) % q
}

pub(crate) fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    (a % q) * (b % q) % q
}

/// Inverse by Fermat's little theorem; caller guarantees a != 0 mod q.
pub(crate) fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    acc
}

/// Rank of a matrix over GF(q), given as a list of equal-length rows of
/// values already reduced mod q. Plain Gaussian elimination.
pub fn rank_mod(rows: &[Vec<u64>], q: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&v| v % q).collect()).collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    // Index loops: elimination reads the pivot row while writing others.
    #[allow(clippy::needless_range_loop)]
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = inv_mod(m[rank][col], q);
        for c in col..cols {
            m[rank][c] = mul_mod(m[rank][c], inv, q);
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                for c in col..cols {
                    let t = mul_mod(factor, m[rank][c], q);
                    m[r][c] = sub_mod(m[r][c], t, q);
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Finds a linear combination of the given rows reproducing `target`,
/// returning the combination if one exists. Used by user-side decoding:
/// the observed rows span the wanted selector row iff the message
/// component is decodable.
pub fn express_in_span(rows: &[Vec<u64>], target: &[u64], q: u64) -> Option<Vec<u64>> {
    let n = rows.len();
    let cols = target.len();
    // Augment each row with an indicator so elimination tracks the combination.
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<u64> = r.iter().map(|&v| v % q).collect();
            row.extend((0..n).map(|j| u64::from(j == i)));
            row
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut rank = 0;
    #[allow(clippy::needless_range_loop)]
    for col in 0..cols {
        let Some(p) = (rank..n).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = inv_mod(m[rank][col], q);
        for c in 0..cols + n {
            m[rank][c] = mul_mod(m[rank][c], inv, q);
        }
        for r in 0..n {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                for c in 0..cols + n {
                    let t = mul_mod(factor, m[rank][c], q);
                    m[r][c] = sub_mod(m[r][c], t, q);
                }
            }
        }
        pivots.push((rank, col));
        rank += 1;
        if rank == n {
            break;
        }
    }
    // Reduce the target against the pivot rows.
    let mut residual: Vec<u64> = target.iter().map(|&v| v % q).collect();
    let mut combo = vec![0u64; n];
    for &(row, col) in &pivots {
        let factor = residual[col];
        if factor != 0 {
            for c in 0..cols {
                let t = mul_mod(factor, m[row][c], q);
                residual[c] = sub_mod(residual[c], t, q);
            }
            for j in 0..n {
                let t = mul_mod(factor, m[row][cols + j], q);
                combo[j] = add_mod(combo[j], t, q);
            }
        }
    }
    if residual.iter().all(|&v| v == 0) {
        Some(combo)
    } else {
        None
    }
}
