//! Prime-field arithmetic and the classical character sums over `F_p`.
//!
//! Additive characters are carried around as integer root indices `k` (meaning
//! `e^{2πik/p}`) and only turned into floating complex numbers when a sum is
//! accumulated, so identities such as `χ(a)χ(b) = χ(a+b)` hold exactly at the
//! index level.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex numbers are double precision throughout the crate.
pub type ComplexValue = Complex64;

/// Largest modulus accepted. Every grid used by the crate is far smaller.
pub const MAX_MODULUS: u32 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("modulus {0} exceeds the supported maximum {MAX_MODULUS}")]
    TooLarge(u32),
}

/// The prime field `F_p` for an odd prime `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    p: u32,
}

/// A canonical residue in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[repr(transparent)]
pub struct FieldElement(pub(crate) u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic primality by trial division; moduli are bounded by [`MAX_MODULUS`].
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl TryFrom<u32> for PrimeField {
    type Error = FieldError;

    fn try_from(p: u32) -> Result<Self, Self::Error> {
        PrimeField::new(p)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.p
    }
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenCharacteristic);
        }
        if p > MAX_MODULUS {
            return Err(FieldError::TooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Size of the field as a float, the `q` of every normalization.
    #[inline]
    pub fn q(&self) -> f64 {
        self.p as f64
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn elem(&self, v: i64) -> FieldElement {
        FieldElement(v.rem_euclid(self.p as i64) as u32)
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        FieldElement(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.p).map(FieldElement)
    }

    pub fn units(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.p).map(FieldElement)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32)
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let p = self.p as u64;
        let mut base = a.0 as u64;
        let mut acc = 1u64 % p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        FieldElement(acc as u32)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.0 == 0 {
            None
        } else {
            Some(self.pow(a, (self.p - 2) as u64))
        }
    }

    /// `e^{2πik/p}` for a root index `k` (taken mod p).
    #[inline]
    pub fn root(&self, k: u64) -> ComplexValue {
        let k = (k % self.p as u64) as f64;
        ComplexValue::from_polar(1.0, TAU * k / self.q())
    }
}

/// The additive character `χ(t) = e^{2πit/p}`.
pub fn additive_character(field: &PrimeField, t: FieldElement) -> ComplexValue {
    field.root(t.0 as u64)
}

/// The Legendre symbol `η(t)` via Euler's criterion.
pub fn quadratic_character(field: &PrimeField, t: FieldElement) -> i8 {
    if t.is_zero() {
        return 0;
    }
    let e = field.pow(t, ((field.p - 1) / 2) as u64);
    if e.0 == 1 {
        1
    } else {
        -1
    }
}

/// Precomputed `e^{2πik/p}` for all `k`, so sums index a table instead of calling `sin`/`cos`.
#[derive(Debug, Clone)]
pub struct RootTable {
    p: u32,
    roots: Vec<ComplexValue>,
}

impl RootTable {
    pub fn new(field: &PrimeField) -> Self {
        let roots = (0..field.p as u64).map(|k| field.root(k)).collect();
        RootTable { p: field.p, roots }
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Root for an already reduced index.
    #[inline]
    pub fn get(&self, k: usize) -> ComplexValue {
        self.roots[k]
    }

    #[inline]
    pub fn as_slice(&self) -> &[ComplexValue] {
        &self.roots
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: ComplexValue) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> ComplexValue {
        ComplexValue::new(self.re + self.re_c, self.im + self.im_c)
    }
}

impl FromIterator<ComplexValue> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = ComplexValue>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

/// `G = Σ_{t≠0} η(t) χ(t)`.
pub fn gauss_sum(field: &PrimeField) -> ComplexValue {
    field
        .units()
        .map(|t| field.root(t.0 as u64) * quadratic_character(field, t) as f64)
        .collect::<CompensatedSum>()
        .value()
}

/// The twisted sum `Σ_{s≠0} η(s) χ(c/s)`.
pub fn salie_type_sum(field: &PrimeField, c: FieldElement) -> ComplexValue {
    field
        .units()
        .map(|s| {
            let s_inv = field.inv(s).expect("unit");
            let k = field.mul(c, s_inv);
            field.root(k.0 as u64) * quadratic_character(field, s) as f64
        })
        .collect::<CompensatedSum>()
        .value()
}
