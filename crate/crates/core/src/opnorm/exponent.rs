//! Exponent pairs stored as exact reciprocals `(1/p, 1/r)`, with `1/∞ = 0`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExponentError {
    #[error("cannot parse exponent {0:?}: expected an integer, a fraction like 4/3, or inf")]
    Parse(String),
    #[error("exponent {0} is below 1")]
    BelowOne(String),
}

/// `(1/p, 1/r)` with both reciprocals in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    inv_p: Rational,
    inv_r: Rational,
}

/// Parses an exponent `e ≥ 1` (`"2"`, `"4/3"`, `"inf"`) and returns `1/e`.
pub fn parse_reciprocal(text: &str) -> Result<Rational, ExponentError> {
    let t = text.trim();
    if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
        return Ok(Rational::zero());
    }
    let e = Rational::from_str(t).map_err(|_| ExponentError::Parse(text.to_string()))?;
    if e < Rational::one() {
        return Err(ExponentError::BelowOne(text.to_string()));
    }
    Ok(e.recip())
}

fn reciprocal_to_f64(inv: Rational) -> f64 {
    if inv.is_zero() {
        f64::INFINITY
    } else {
        *inv.denom() as f64 / *inv.numer() as f64
    }
}

fn format_exponent(inv: Rational) -> String {
    if inv.is_zero() {
        "inf".to_string()
    } else {
        inv.recip().to_string()
    }
}

impl ExponentPair {
    /// From reciprocals; each must lie in `[0, 1]`.
    pub fn from_reciprocals(inv_p: Rational, inv_r: Rational) -> Result<Self, ExponentError> {
        for v in [inv_p, inv_r] {
            if v < Rational::zero() || v > Rational::one() {
                return Err(ExponentError::BelowOne(format_exponent(v)));
            }
        }
        Ok(ExponentPair { inv_p, inv_r })
    }

    /// From exponent strings such as `("4/3", "4")` or `("1", "inf")`.
    pub fn parse(p: &str, r: &str) -> Result<Self, ExponentError> {
        Self::from_reciprocals(parse_reciprocal(p)?, parse_reciprocal(r)?)
    }

    /// From integer exponents; `0` stands for `∞`.
    pub fn integers(p: i64, r: i64) -> Self {
        let inv = |e: i64| if e == 0 { Rational::zero() } else { Rational::new(1, e) };
        Self::from_reciprocals(inv(p), inv(r)).expect("integer exponents are at least 1")
    }

    pub fn inv_p(&self) -> Rational {
        self.inv_p
    }

    pub fn inv_r(&self) -> Rational {
        self.inv_r
    }

    /// `p` as a float, `∞` when `1/p = 0`.
    pub fn p(&self) -> f64 {
        reciprocal_to_f64(self.inv_p)
    }

    pub fn r(&self) -> f64 {
        reciprocal_to_f64(self.inv_r)
    }

    /// Hölder conjugates `(p', r')`.
    pub fn dual(&self) -> ExponentPair {
        ExponentPair { inv_p: Rational::one() - self.inv_p, inv_r: Rational::one() - self.inv_r }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}→{})", format_exponent(self.inv_p), format_exponent(self.inv_r))
    }
}
