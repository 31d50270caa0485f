//! GF(2^8) arithmetic over the AES polynomial x^8 + x^4 + x^3 + x + 1 (0x11B).
//!
//! Multiplication goes through log/antilog tables built at compile time from
//! the shift-and-xor routine [`mul_slow`]; [`tables_consistent`] re-checks
//! every product against it and callers run it once at startup.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub, SubAssign};

use thiserror::Error;

/// Reduction polynomial, including the x^8 term.
pub const POLY: u16 = 0x11B;

/// 3 generates the multiplicative group under 0x11B (2 does not).
const GENERATOR: u8 = 0x03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("symbol vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Shift-and-xor ("peasant") multiplication. Slow, table free, and the
/// reference the tables are checked against.
pub const fn mul_slow(a: u8, b: u8) -> u8 {
    let mut acc = 0u8;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= (POLY & 0xFF) as u8;
        }
        b >>= 1;
    }
    acc
}

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut x = 1u8;
    let mut i = 0;
    while i < 255 {
        table[i] = x;
        table[i + 255] = x;
        x = mul_slow(x, GENERATOR);
        i += 1;
    }
    // Indices 510 and 511 are never reached by log sums (max 254 + 254).
    table
}

const fn build_log() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut x = 1u8;
    let mut i = 0;
    while i < 255 {
        table[x as usize] = i as u8;
        x = mul_slow(x, GENERATOR);
        i += 1;
    }
    table
}

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

/// Exhaustively compares the table multiply with [`mul_slow`] over all
/// 65536 operand pairs.
pub fn tables_consistent() -> bool {
    (0..=255u8).all(|a| (0..=255u8).all(|b| Gf256(a) * Gf256(b) == Gf256(mul_slow(a, b))))
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Self = Gf256(0);
    pub const ONE: Self = Gf256(1);

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        if self.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let log = LOG[self.0 as usize] as usize;
        Ok(Gf256(EXP[255 - log]))
    }

    /// `self^exp`, with `0^0 = 1`.
    pub fn pow(self, exp: u32) -> Self {
        if exp == 0 {
            return Self::ONE;
        }
        if self.0 == 0 {
            return Self::ZERO;
        }
        let log = LOG[self.0 as usize] as u64;
        Gf256(EXP[((log * exp as u64) % 255) as usize])
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Add for Gf256 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Gf256(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Sub for Gf256 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Gf256(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl SubAssign for Gf256 {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.0 == 0 || rhs.0 == 0 {
            return Self::ZERO;
        }
        Gf256(EXP[LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize])
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

/// Panics on division by zero, like integer division.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Gf256 {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv().expect("division by zero in GF(256)")
    }
}

pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    a + b
}

pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    a * b
}

pub fn gf_inv(a: Gf256) -> Result<Gf256, FieldError> {
    a.inv()
}

/// A packet payload viewed as a vector of field symbols, one per byte.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolVector(Vec<u8>);

impl SymbolVector {
    pub fn zeros(len: usize) -> Self {
        SymbolVector(vec![0; len])
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        SymbolVector(bytes.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn get(&self, i: usize) -> Gf256 {
        Gf256(self.0[i])
    }

    /// Zero-extends (or truncates) to `len` symbols.
    pub fn resize(&mut self, len: usize) {
        self.0.resize(len, 0);
    }

    pub fn scale(&mut self, alpha: Gf256) {
        if alpha == Gf256::ONE {
            return;
        }
        if alpha.is_zero() {
            self.0.iter_mut().for_each(|b| *b = 0);
            return;
        }
        let la = LOG[alpha.0 as usize] as usize;
        for b in &mut self.0 {
            if *b != 0 {
                *b = EXP[la + LOG[*b as usize] as usize];
            }
        }
    }

    /// `self += alpha * x`, requiring equal lengths.
    pub fn axpy(&mut self, alpha: Gf256, x: &SymbolVector) -> Result<(), FieldError> {
        if x.len() != self.len() {
            return Err(FieldError::LengthMismatch {
                left: x.len(),
                right: self.len(),
            });
        }
        self.add_scaled(alpha, x.as_bytes());
        Ok(())
    }

    /// `self += alpha * x`, treating `x` as zero-padded to `self`'s length.
    /// Grows `self` when `x` is longer.
    pub fn add_scaled(&mut self, alpha: Gf256, x: &[u8]) {
        if x.len() > self.0.len() {
            self.0.resize(x.len(), 0);
        }
        if alpha.is_zero() {
            return;
        }
        if alpha == Gf256::ONE {
            for (y, &xv) in self.0.iter_mut().zip(x) {
                *y ^= xv;
            }
            return;
        }
        let la = LOG[alpha.0 as usize] as usize;
        for (y, &xv) in self.0.iter_mut().zip(x) {
            if xv != 0 {
                *y ^= EXP[la + LOG[xv as usize] as usize];
            }
        }
    }
}

impl fmt::Debug for SymbolVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolVector(len={}, ", self.0.len())?;
        for b in self.0.iter().take(8) {
            write!(f, "{b:02x}")?;
        }
        if self.0.len() > 8 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u8>> for SymbolVector {
    fn from(v: Vec<u8>) -> Self {
        SymbolVector(v)
    }
}

/// Returns `y + alpha * x`.
pub fn vec_axpy(alpha: Gf256, x: &SymbolVector, y: &SymbolVector) -> Result<SymbolVector, FieldError> {
    let mut out = y.clone();
    out.axpy(alpha, x)?;
    Ok(out)
}
