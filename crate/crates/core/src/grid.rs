//! Row-major little-endian indexing of `F_p^d`: the point `(x₁,…,x_d)` lives at
//! `Σ xᵢ·p^{i-1}`. Every table in the crate uses this layout.

use thiserror::Error;

use crate::ffield::PrimeField;

/// Largest grid (`p^d`) any enumeration or transform will allocate.
pub const MAX_GRID_POINTS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid p^d = {p}^{dim} exceeds the limit of {MAX_GRID_POINTS} points")]
    TooLarge { p: u32, dim: usize },
    #[error("dimension {0} is outside the supported range 1..=9")]
    BadDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    field: PrimeField,
    dim: usize,
    size: usize,
}

impl Grid {
    pub fn new(field: PrimeField, dim: usize) -> Result<Self, GridError> {
        if dim == 0 || dim > 9 {
            return Err(GridError::BadDimension(dim));
        }
        let p = field.modulus() as u128;
        let size = p.checked_pow(dim as u32).unwrap_or(u128::MAX);
        if size > MAX_GRID_POINTS as u128 {
            return Err(GridError::TooLarge { p: field.modulus(), dim });
        }
        Ok(Grid { field, dim, size: size as usize })
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.field.modulus()
    }

    /// Number of points, `p^d`.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, coords: &[u32]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        let p = self.p() as usize;
        coords.iter().rev().fold(0usize, |acc, &c| acc * p + (c as usize % p))
    }

    pub fn decode_into(&self, mut idx: usize, out: &mut [u32]) {
        let p = self.p() as usize;
        for c in out.iter_mut().take(self.dim) {
            *c = (idx % p) as u32;
            idx /= p;
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        self.decode_into(idx, &mut out);
        out
    }

    /// Index of `a + b` (coordinatewise mod p).
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, |x, y, p| (x + y) % p)
    }

    /// Index of `a - b`.
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, |x, y, p| (x + p - y) % p)
    }

    pub fn neg(&self, a: usize) -> usize {
        self.sub(0, a)
    }

    /// Index of `t·a`.
    pub fn scale(&self, a: usize, t: u32) -> usize {
        let p = self.p() as usize;
        let (mut a, mut out, mut w) = (a, 0usize, 1usize);
        for _ in 0..self.dim {
            out += (a % p) * t as usize % p * w;
            a /= p;
            w *= p;
        }
        out
    }

    #[inline]
    fn combine(&self, mut a: usize, mut b: usize, f: impl Fn(usize, usize, usize) -> usize) -> usize {
        let p = self.p() as usize;
        let (mut out, mut w) = (0usize, 1usize);
        for _ in 0..self.dim {
            out += f(a % p, b % p, p) * w;
            a /= p;
            b /= p;
            w *= p;
        }
        out
    }

    /// `a·b mod p` for two grid indices.
    pub fn dot(&self, mut a: usize, mut b: usize) -> u32 {
        let p = self.p() as usize;
        let mut acc = 0usize;
        for _ in 0..self.dim {
            acc = (acc + (a % p) * (b % p)) % p;
            a /= p;
            b /= p;
        }
        acc as u32
    }

    /// `(m·x) mod p` for every grid point `m`, for a fixed `x`, in index order.
    pub fn dot_table(&self, x: &[u32]) -> Vec<u32> {
        let p = self.p();
        let mut out = Vec::with_capacity(self.size);
        out.push(0u32);
        // Each new axis extends the table by shifting the previous block.
        let mut len = 1usize;
        for &xi in x.iter().take(self.dim) {
            for c in 1..p as u64 {
                let shift = (c * xi as u64 % p as u64) as u32;
                for j in 0..len {
                    let v = out[j] + shift;
                    out.push(if v >= p { v - p } else { v });
                }
            }
            len *= p as usize;
        }
        out
    }

    /// Canonical representative of the projective class of a nonzero point:
    /// scaled so that the first nonzero coordinate is 1.
    pub fn projective_canonical(&self, coords: &[u32]) -> Option<Vec<u32>> {
        let field = self.field;
        let lead = coords.iter().find(|&&c| c != 0)?;
        let inv = field.inv(field.elem(*lead as i64))?;
        Some(coords.iter().map(|&c| field.mul(field.elem(c as i64), inv).value()).collect())
    }

    /// Every canonical projective representative, in lexicographic order of the
    /// trailing coordinates.
    pub fn projective_points(&self) -> Vec<Vec<u32>> {
        let p = self.p();
        let mut out = Vec::new();
        for lead in 0..self.dim {
            let tail = self.dim - lead - 1;
            let count = (p as usize).pow(tail as u32);
            for k in 0..count {
                let mut v = vec![0u32; self.dim];
                v[lead] = 1;
                let mut r = k;
                for c in v.iter_mut().skip(lead + 1) {
                    *c = (r % p as usize) as u32;
                    r /= p as usize;
                }
                out.push(v);
            }
        }
        out
    }
}
