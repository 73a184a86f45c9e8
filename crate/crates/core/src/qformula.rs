//! Closed-form Fourier transforms of diagonal quadric cones and decay sweeps
//! for diagonal level sets `{Σ aⱼxⱼ^s = t}`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::{gauss_sum, quadratic_character, salie_type_sum, ComplexValue, FieldElement, PrimeField};
use crate::grid::{Grid, GridError};
use crate::mpoly::Poly;
use crate::spectrum::{fourier_forward, Measure, SpectralTable, SpectrumError};

/// Upper bound on `p^{d+1}·d` for a decay sweep.
pub const SCAN_GUARD: f64 = 1e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QformulaError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("closed form is for m ≠ 0")]
    ZeroFrequency,
    #[error("expected {expected} coordinates, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("coefficient a{0} is zero")]
    ZeroCoefficient(usize),
    #[error("characteristic {p} divides the degree {degree}")]
    CharacteristicDividesDegree { p: u32, degree: u32 },
    #[error("scan needs odd dimension 3 or 5, got {0}")]
    UnsupportedDimension(usize),
    #[error("p = {p}, d = {d} exceeds the scan guard")]
    ComputeGuard { p: u32, d: usize },
}

/// `P(x) = Σ aⱼ xⱼ^s` over `F_p` with every `aⱼ ≠ 0` and `p ∤ s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalForm {
    field: PrimeField,
    degree: u32,
    coeffs: Vec<FieldElement>,
}

impl DiagonalForm {
    pub fn new(field: PrimeField, degree: u32, coeffs: &[i64]) -> Result<Self, QformulaError> {
        if degree < 2 {
            return Err(QformulaError::DegreeTooSmall(degree));
        }
        let p = field.modulus();
        if p.gcd(&degree) != 1 {
            return Err(QformulaError::CharacteristicDividesDegree { p, degree });
        }
        let coeffs: Vec<FieldElement> = coeffs.iter().map(|&a| field.elem(a)).collect();
        if let Some(j) = coeffs.iter().position(|a| a.is_zero()) {
            return Err(QformulaError::ZeroCoefficient(j + 1));
        }
        Ok(DiagonalForm { field, degree, coeffs })
    }

    /// `Σ xⱼ^s`.
    pub fn fermat(field: PrimeField, degree: u32, d: usize) -> Result<Self, QformulaError> {
        Self::new(field, degree, &vec![1; d])
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn to_poly(&self) -> Poly {
        let d = self.dim();
        Poly::from_terms(
            self.field,
            d,
            self.coeffs.iter().enumerate().map(|(j, &a)| {
                let mut e = vec![0; d];
                e[j] = self.degree;
                (a, e)
            }),
        )
    }

    /// Values `P(x)` at every grid index.
    fn value_table(&self, grid: &Grid) -> Vec<FieldElement> {
        self.to_poly().value_table(grid)
    }
}

/// `Ĥ(m)` for `H = {Σ aⱼxⱼ² = 0} ⊂ F_p^d`, `m ≠ 0`, by completing the square in
/// each coordinate:
/// `Ĥ(m) = q^{−d−1} G^d Πη(aⱼ) Σ_{s≠0} η(s)^d χ(c/s)` with `c = −(Σ mⱼ²/aⱼ)/4`.
/// For odd `d` the inner sum is a Salié-type sum; for even `d` it is `q − 1`
/// when `c = 0` and `−1` otherwise.
pub fn diagonal_quadratic_fourier(field: PrimeField, a: &[i64], m: &[u32]) -> Result<ComplexValue, QformulaError> {
    if a.len() != m.len() {
        return Err(QformulaError::WrongLength { expected: a.len(), got: m.len() });
    }
    let form = DiagonalForm::new(field, 2, a)?;
    let m: Vec<FieldElement> = m.iter().map(|&v| field.elem(v as i64)).collect();
    if m.iter().all(|v| v.is_zero()) {
        return Err(QformulaError::ZeroFrequency);
    }
    let d = form.dim();
    let mut dual = field.zero();
    let mut eta_a = 1i8;
    for (&aj, &mj) in form.coeffs().iter().zip(&m) {
        let inv = field.inv(aj).expect("nonzero coefficient");
        dual = field.add(dual, field.mul(field.mul(mj, mj), inv));
        eta_a *= quadratic_character(&field, aj);
    }
    let four_inv = field.inv(field.elem(4)).expect("p is odd");
    let c = field.neg(field.mul(dual, four_inv));
    let inner = if d % 2 == 1 {
        salie_type_sum(&field, c)
    } else if c.is_zero() {
        ComplexValue::new(field.q() - 1.0, 0.0)
    } else {
        ComplexValue::new(-1.0, 0.0)
    };
    let q = field.q();
    Ok(gauss_sum(&field).powu(d as u32) * inner * (eta_a as f64) * q.powi(-(d as i32) - 1))
}

/// [`diagonal_quadratic_fourier`] in three variables.
pub fn diagonal_quadratic_fourier_d3(
    field: PrimeField,
    a: [i64; 3],
    m: [u32; 3],
) -> Result<ComplexValue, QformulaError> {
    diagonal_quadratic_fourier(field, &a, &m)
}

/// [`diagonal_quadratic_fourier`] for `x1² + x2² + x3² + x4²`.
pub fn diagonal_quadratic_fourier_d4(field: PrimeField, m: [u32; 4]) -> Result<ComplexValue, QformulaError> {
    diagonal_quadratic_fourier(field, &[1; 4], &m)
}

fn level_transform(grid: Grid, values: &[FieldElement], t: FieldElement) -> Result<SpectralTable, QformulaError> {
    let ind: Vec<f64> = values.iter().map(|&v| (v == t) as u8 as f64).collect();
    Ok(fourier_forward(&SpectralTable::from_real(grid, Measure::Space, &ind)?)?)
}

fn max_nonzero_frequency(hat: &SpectralTable) -> f64 {
    hat.values()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_guard(p: u32, d: usize) -> Result<(), QformulaError> {
    if (p as f64).powi(d as i32 + 1) * d as f64 > SCAN_GUARD {
        return Err(QformulaError::ComputeGuard { p, d });
    }
    Ok(())
}

/// Normalized maxima of `|Ĥ_t(m)|` over `m ≠ 0` for the level sets of a
/// diagonal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub p: u32,
    pub d: usize,
    pub s: u32,
    /// `q^{d/2} · max|Ĥ₀(m)|`.
    pub max_t0: f64,
    /// `q^{(d+1)/2} · max|Ĥ₀(m)|`.
    pub max_t0_sharp: f64,
    /// `q^{(d+1)/2} · max_{t≠0} max|Ĥ_t(m)|`.
    pub max_tnz: f64,
}

/// Exhaustive transforms of every level set `{P = t}`.
pub fn level_decay_check(form: &DiagonalForm) -> Result<DecayCheck, QformulaError> {
    let field = form.field();
    let d = form.dim();
    check_guard(field.modulus(), d)?;
    let grid = Grid::new(field, d)?;
    let values = form.value_table(&grid);
    let q = field.q();
    let mut max0 = 0.0;
    let mut max_nz = 0.0f64;
    for t in field.elements() {
        let m = max_nonzero_frequency(&level_transform(grid, &values, t)?);
        if t.is_zero() {
            max0 = m;
        } else {
            max_nz = max_nz.max(m);
        }
    }
    Ok(DecayCheck {
        p: field.modulus(),
        d,
        s: form.degree(),
        max_t0: q.powf(d as f64 / 2.0) * max0,
        max_t0_sharp: q.powf((d + 1) as f64 / 2.0) * max0,
        max_tnz: q.powf((d + 1) as f64 / 2.0) * max_nz,
    })
}

/// One line of an evidence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub p: u32,
    pub d: usize,
    pub s: u32,
    /// `t0` or `t0-half` for the zero set, `tnz` for the worst nonzero level.
    pub branch: String,
    pub normalized_max: f64,
}

impl EvidenceRow {
    pub const CSV_HEADER: &'static str = "p,d,s,branch,normalized_max";

    pub fn to_csv(&self) -> String {
        format!("{},{},{},{},{}", self.p, self.d, self.s, self.branch, self.normalized_max)
    }
}

impl DecayCheck {
    /// `t0-half` carries the `q^{d/2}` scale; `t0` and `tnz` the `q^{(d+1)/2}` scale.
    pub fn rows(&self) -> [EvidenceRow; 3] {
        let row = |branch: &str, normalized_max| EvidenceRow {
            p: self.p,
            d: self.d,
            s: self.s,
            branch: branch.into(),
            normalized_max,
        };
        [row("t0-half", self.max_t0), row("t0", self.max_t0_sharp), row("tnz", self.max_tnz)]
    }
}

/// `q^{(d+1)/2} · max_{m≠0} |Ĥ₀(m)|` for `Σ aⱼxⱼ^s` in odd dimension, one row
/// per prime. Primes dividing `s` are skipped.
pub fn odd_dimension_scan(degree: u32, coeffs: &[i64], primes: &[u32]) -> Result<Vec<EvidenceRow>, QformulaError> {
    let d = coeffs.len();
    if d != 3 && d != 5 {
        return Err(QformulaError::UnsupportedDimension(d));
    }
    for &p in primes {
        check_guard(p, d)?;
    }
    let mut rows = Vec::with_capacity(primes.len());
    for &p in primes {
        let field = PrimeField::new(p).map_err(|_| QformulaError::CharacteristicDividesDegree { p, degree })?;
        let form = match DiagonalForm::new(field, degree, coeffs) {
            Err(QformulaError::CharacteristicDividesDegree { .. }) => continue,
            other => other?,
        };
        let grid = Grid::new(field, d)?;
        let hat = level_transform(grid, &form.value_table(&grid), field.zero())?;
        rows.push(EvidenceRow {
            p,
            d,
            s: degree,
            branch: "t0".into(),
            normalized_max: field.q().powf((d + 1) as f64 / 2.0) * max_nonzero_frequency(&hat),
        });
    }
    Ok(rows)
}
