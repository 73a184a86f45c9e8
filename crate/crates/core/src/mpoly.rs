//! Sparse multivariate polynomials over `F_p`.
//!
//! Text form: variables `x1`..`x9`, integer literals (optionally negative),
//! operators `+ - * ^` with `^` binding tightest, then `*`, then `+ -`.
//! Whitespace is ignored; juxtaposition (`x1 x2`) is rejected.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::ffield::{FieldElement, PrimeField};
use crate::grid::{Grid, GridError};

/// Total degree cap enforced by the parser.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("variable x{index} at position {position} is out of range for {nvars} variables")]
    VariableOutOfRange { position: usize, index: usize, nvars: usize },
    #[error("total degree {0} exceeds the maximum of {MAX_DEGREE}")]
    DegreeTooHigh(u32),
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: FieldElement,
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// A polynomial in canonical sparse form: no zero coefficients, no repeated
/// exponent vectors, terms ordered by descending total degree then descending
/// exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    field: PrimeField,
    nvars: usize,
    terms: Vec<Term>,
}

/// Result of a homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homogeneity {
    Homogeneous(u32),
    Inhomogeneous,
    /// The zero polynomial has no degree.
    Zero,
}

/// Replaces variable `var` by `Σ coeffs[j]·y_j`, where `y` ranges over the
/// remaining variables in their original order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSubstitution {
    pub var: usize,
    pub coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn zero(field: PrimeField, nvars: usize) -> Self {
        Poly { field, nvars, terms: Vec::new() }
    }

    pub fn constant(field: PrimeField, nvars: usize, c: FieldElement) -> Self {
        Self::from_terms(field, nvars, [(c, vec![0; nvars])])
    }

    /// The monomial `x_{i+1}` (zero-based index `i`).
    pub fn var(field: PrimeField, nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::from_terms(field, nvars, [(field.one(), e)])
    }

    /// Builds the canonical form, merging like terms and dropping zeros.
    pub fn from_terms<I>(field: PrimeField, nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (FieldElement, Vec<u32>)>,
    {
        let mut acc: BTreeMap<Vec<u32>, FieldElement> = BTreeMap::new();
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length must equal nvars");
            let slot = acc.entry(e).or_insert(FieldElement::ZERO);
            *slot = field.add(*slot, c);
        }
        let mut terms: Vec<Term> =
            acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(exponents, coeff)| Term { coeff, exponents }).collect();
        terms.sort_by(|a, b| b.degree().cmp(&a.degree()).then_with(|| b.exponents.cmp(&a.exponents)));
        Poly { field, nvars, terms }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(Term::degree).max()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_compatible(other);
        Poly::from_terms(
            self.field,
            self.nvars,
            self.terms.iter().chain(&other.terms).map(|t| (t.coeff, t.exponents.clone())),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(self.field.neg(self.field.one())))
    }

    pub fn scale(&self, c: FieldElement) -> Poly {
        Poly::from_terms(
            self.field,
            self.nvars,
            self.terms.iter().map(|t| (self.field.mul(c, t.coeff), t.exponents.clone())),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_compatible(other);
        let f = self.field;
        let mut products = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                products.push((f.mul(a.coeff, b.coeff), e));
            }
        }
        Poly::from_terms(f, self.nvars, products)
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::constant(self.field, self.nvars, self.field.one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `P - t`.
    pub fn minus_constant(&self, t: FieldElement) -> Poly {
        self.sub(&Poly::constant(self.field, self.nvars, t))
    }

    fn check_compatible(&self, other: &Poly) {
        assert_eq!(self.field, other.field, "polynomials over different fields");
        assert_eq!(self.nvars, other.nvars, "polynomials in different numbers of variables");
    }

    pub fn evaluate(&self, x: &[u32]) -> Result<FieldElement, PolyError> {
        if x.len() != self.nvars {
            return Err(PolyError::Arity { expected: self.nvars, got: x.len() });
        }
        Ok(self.evaluator().eval(x))
    }

    /// Power-table evaluator for repeated evaluation of this polynomial.
    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(self)
    }

    /// Values of the polynomial at every point of `grid`, in grid index order.
    pub fn value_table(&self, grid: &Grid) -> Vec<FieldElement> {
        assert_eq!(grid.dim(), self.nvars);
        assert_eq!(grid.field(), self.field);
        let ev = self.evaluator();
        let mut x = vec![0u32; self.nvars];
        let p = self.field.modulus();
        let mut out = Vec::with_capacity(grid.size());
        for _ in 0..grid.size() {
            out.push(ev.eval(&x));
            // odometer increment, little-endian
            for c in x.iter_mut() {
                *c += 1;
                if *c < p {
                    break;
                }
                *c = 0;
            }
        }
        out
    }

    pub fn is_homogeneous(&self) -> Homogeneity {
        let mut degrees = self.terms.iter().map(Term::degree);
        match degrees.next() {
            None => Homogeneity::Zero,
            Some(d) if degrees.all(|e| e == d) => Homogeneity::Homogeneous(d),
            Some(_) => Homogeneity::Inhomogeneous,
        }
    }

    /// `Some((s, [a₁, …, a_d]))` when the polynomial is `Σ aⱼ xⱼ^s` with every
    /// `aⱼ ≠ 0` and `s ≥ 1`.
    pub fn as_diagonal(&self) -> Option<(u32, Vec<FieldElement>)> {
        if self.terms.len() != self.nvars || self.nvars == 0 {
            return None;
        }
        let s = self.terms[0].degree();
        let mut coeffs = vec![FieldElement::ZERO; self.nvars];
        for t in &self.terms {
            let mut nonzero = t.exponents.iter().enumerate().filter(|&(_, &e)| e != 0);
            let (j, &e) = nonzero.next()?;
            if nonzero.next().is_some() || e != s || !coeffs[j].is_zero() {
                return None;
            }
            coeffs[j] = t.coeff;
        }
        (s >= 1).then_some((s, coeffs))
    }

    /// Formal substitution of a linear form for one variable, yielding a
    /// polynomial in the remaining `nvars - 1` variables.
    pub fn restrict_to_hyperplane(&self, sub: &LinearSubstitution) -> Poly {
        assert!(sub.var < self.nvars, "eliminated variable out of range");
        assert_eq!(sub.coeffs.len(), self.nvars - 1, "linear form must cover the remaining variables");
        let f = self.field;
        let n = self.nvars - 1;
        let form = Poly::from_terms(
            f,
            n,
            sub.coeffs.iter().enumerate().map(|(j, &c)| {
                let mut e = vec![0; n];
                e[j] = 1;
                (c, e)
            }),
        );
        let mut form_powers: BTreeMap<u32, Poly> = BTreeMap::new();
        let mut out = Poly::zero(f, n);
        for t in &self.terms {
            let k = t.exponents[sub.var];
            let rest: Vec<u32> =
                t.exponents.iter().enumerate().filter(|&(i, _)| i != sub.var).map(|(_, &e)| e).collect();
            let mono = Poly::from_terms(f, n, [(t.coeff, rest)]);
            let lk = form_powers.entry(k).or_insert_with(|| form.pow(k));
            out = out.add(&mono.mul(lk));
        }
        out
    }

    /// True iff the polynomial vanishes at every point of `F_p^{nvars}`.
    pub fn is_functionally_zero(&self) -> Result<bool, PolyError> {
        if self.is_zero() {
            return Ok(true);
        }
        if self.nvars == 0 {
            return Ok(false);
        }
        let grid = Grid::new(self.field, self.nvars)?;
        Ok(self.value_table(&grid).iter().all(|v| v.is_zero()))
    }
}

/// Evaluates a polynomial through a `p × (maxdeg+1)` power table.
#[derive(Debug)]
pub struct Evaluator<'a> {
    poly: &'a Poly,
    stride: usize,
    powers: Vec<u32>,
}

impl<'a> Evaluator<'a> {
    fn new(poly: &'a Poly) -> Self {
        let p = poly.field.modulus() as u64;
        let maxexp = poly.terms.iter().flat_map(|t| t.exponents.iter().copied()).max().unwrap_or(0) as usize;
        let stride = maxexp + 1;
        let mut powers = vec![0u32; p as usize * stride];
        for x in 0..p {
            let mut acc = 1u64 % p;
            for e in 0..stride {
                powers[x as usize * stride + e] = acc as u32;
                acc = acc * x % p;
            }
        }
        Evaluator { poly, stride, powers }
    }

    #[inline]
    pub fn eval(&self, x: &[u32]) -> FieldElement {
        let p = self.poly.field.modulus() as u64;
        let mut acc = 0u64;
        for t in &self.poly.terms {
            let mut m = t.coeff.value() as u64;
            for (xi, &e) in x.iter().zip(&t.exponents) {
                if e != 0 {
                    m = m * self.powers[(*xi as u64 % p) as usize * self.stride + e as usize] as u64 % p;
                }
            }
            acc += m;
        }
        FieldElement((acc % p) as u32)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            match (t.coeff.value(), vars.is_empty()) {
                (c, true) => write!(f, "{c}")?,
                (1, false) => write!(f, "{}", vars.join("*"))?,
                (c, false) => write!(f, "{c}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Var(usize),
    Int(u64),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PolyError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            b'^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            b'x' => {
                let start = i;
                i += 1;
                let ds = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if ds == i {
                    return Err(PolyError::Syntax {
                        position: start,
                        message: "expected variable index after 'x'".into(),
                    });
                }
                let idx: usize = text[ds..i]
                    .parse()
                    .map_err(|_| PolyError::Syntax { position: start, message: "variable index too large".into() })?;
                out.push((start, Tok::Var(idx)));
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: u64 = text[start..i].parse().map_err(|_| PolyError::Syntax {
                    position: start,
                    message: "integer literal out of range".into(),
                })?;
                out.push((start, Tok::Int(v)));
            }
            _ => {
                return Err(PolyError::Syntax {
                    position: i,
                    message: format!("unexpected character {:?}", text[i..].chars().next().unwrap_or('?')),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'t> {
    toks: &'t [(usize, Tok)],
    pos: usize,
    end: usize,
    field: PrimeField,
    nvars: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn syntax<T>(&self, message: &str) -> Result<T, PolyError> {
        Err(PolyError::Syntax { position: self.here(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Vec<(FieldElement, Vec<u32>)>, PolyError> {
        let mut terms = Vec::new();
        let mut negate = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        loop {
            let (c, e) = self.term()?;
            terms.push((if negate { self.field.neg(c) } else { c }, e));
            match self.peek() {
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                None => break,
                Some(_) => return self.syntax("expected '+', '-', '*' or end of input"),
            }
            self.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(FieldElement, Vec<u32>), PolyError> {
        let mut coeff = self.field.one();
        let mut exps = vec![0u32; self.nvars];
        loop {
            match self.factor()? {
                Factor::Const(c) => coeff = self.field.mul(coeff, c),
                Factor::Var(i, e) => exps[i] += e,
            }
            if self.peek() == Some(Tok::Star) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let deg: u32 = exps.iter().sum();
        if deg > MAX_DEGREE {
            return Err(PolyError::DegreeTooHigh(deg));
        }
        Ok((coeff, exps))
    }

    fn factor(&mut self) -> Result<Factor, PolyError> {
        let at = self.here();
        let atom = match self.peek() {
            Some(Tok::Var(i)) => {
                if i == 0 || i > self.nvars {
                    return Err(PolyError::VariableOutOfRange { position: at, index: i, nvars: self.nvars });
                }
                self.pos += 1;
                Factor::Var(i - 1, 1)
            }
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Factor::Const(self.field.elem((v % self.field.modulus() as u64) as i64))
            }
            // A negative literal, e.g. `x1*-2`.
            Some(Tok::Minus) if matches!(self.toks.get(self.pos + 1), Some((_, Tok::Int(_)))) => {
                self.pos += 1;
                let Some((_, Tok::Int(v))) = self.toks.get(self.pos).copied() else { unreachable!() };
                self.pos += 1;
                Factor::Const(self.field.neg(self.field.elem((v % self.field.modulus() as u64) as i64)))
            }
            Some(_) => return self.syntax("expected a variable or integer literal"),
            None => return self.syntax("unexpected end of input"),
        };
        if self.peek() != Some(Tok::Caret) {
            return Ok(atom);
        }
        self.pos += 1;
        let Some(Tok::Int(e)) = self.peek() else {
            return self.syntax("expected a non-negative integer exponent");
        };
        self.pos += 1;
        Ok(match atom {
            Factor::Const(c) => Factor::Const(self.field.pow(c, e)),
            Factor::Var(i, _) => {
                if e > MAX_DEGREE as u64 {
                    return Err(PolyError::DegreeTooHigh(e.min(u32::MAX as u64) as u32));
                }
                Factor::Var(i, e as u32)
            }
        })
    }
}

enum Factor {
    Const(FieldElement),
    Var(usize, u32),
}

/// Parses the text form into canonical sparse form over `field`.
pub fn parse_poly(text: &str, nvars: usize, field: PrimeField) -> Result<Poly, PolyError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(PolyError::Syntax { position: 0, message: "empty polynomial".into() });
    }
    let mut parser = Parser { toks: &toks, pos: 0, end: text.len(), field, nvars };
    let terms = parser.expr()?;
    Ok(Poly::from_terms(field, nvars, terms))
}

/// A random homogeneous polynomial of the given degree with up to `max_terms`
/// monomials and uniformly random nonzero coefficients. Never the zero polynomial.
pub fn random_homogeneous<R: Rng + ?Sized>(
    field: PrimeField,
    nvars: usize,
    degree: u32,
    max_terms: usize,
    rng: &mut R,
) -> Poly {
    let monomials = monomials_of_degree(nvars, degree);
    loop {
        let count = rng.random_range(1..=max_terms.max(1));
        let terms = (0..count).map(|_| {
            let e = monomials[rng.random_range(0..monomials.len())].clone();
            (field.elem(rng.random_range(1..field.modulus()) as i64), e)
        });
        let p = Poly::from_terms(field, nvars, terms);
        if !p.is_zero() {
            return p;
        }
    }
}

/// All exponent vectors of `nvars` variables with total degree `degree`.
pub fn monomials_of_degree(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(nvars: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == nvars {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(nvars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        return out;
    }
    rec(nvars, degree, &mut Vec::new(), &mut out);
    out
}
