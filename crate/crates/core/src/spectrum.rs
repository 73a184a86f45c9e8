//! Fourier analysis on `F_q^d` with two measures.
//!
//! Space side (`dx`, normalized counting measure): `f̂(m) = q^{-d} Σ_x χ(−m·x) f(x)`.
//! Frequency side (`dm`, counting measure): `g^∨(x) = Σ_m χ(m·x) g(m)`.
//! Every table carries the tag of the measure it lives on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::{CompensatedSum, ComplexValue, RootTable};
use crate::grid::Grid;
use crate::variety::{projective_intersection_counts, VarietySlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// Normalized counting measure `dx`: total mass 1.
    Space,
    /// Counting measure `dm`.
    Frequency,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("expected a table on the {expected:?} side, got {got:?}")]
    MeasureMismatch { expected: Measure, got: Measure },
    #[error("table has {got} entries, grid has {expected}")]
    Length { expected: usize, got: usize },
    #[error("grids differ")]
    GridMismatch,
    #[error("the closed formula excludes m = 0")]
    ZeroFrequency,
    #[error("function is nonzero at grid index {0}, which is off the carrier")]
    OffCarrier(usize),
    #[error("carrier is empty")]
    EmptyCarrier,
    #[error("carrier is not the zero set of a homogeneous polynomial")]
    NotHomogeneous,
}

/// A complex function on `F_p^d` tagged with its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    grid: Grid,
    measure: Measure,
    values: Vec<ComplexValue>,
}

impl SpectralTable {
    pub fn new(grid: Grid, measure: Measure, values: Vec<ComplexValue>) -> Result<Self, SpectrumError> {
        if values.len() != grid.size() {
            return Err(SpectrumError::Length { expected: grid.size(), got: values.len() });
        }
        Ok(SpectralTable { grid, measure, values })
    }

    pub fn zeros(grid: Grid, measure: Measure) -> Self {
        SpectralTable { grid, measure, values: vec![ComplexValue::new(0.0, 0.0); grid.size()] }
    }

    pub fn from_real(grid: Grid, measure: Measure, values: &[f64]) -> Result<Self, SpectrumError> {
        Self::new(grid, measure, values.iter().map(|&v| ComplexValue::new(v, 0.0)).collect())
    }

    /// The indicator of a point set on the space side.
    pub fn indicator(h: &VarietySlice) -> Self {
        let mut t = Self::zeros(*h.grid(), Measure::Space);
        for &i in h.indices() {
            t.values[i] = ComplexValue::new(1.0, 0.0);
        }
        t
    }

    /// `δ₀` on the given side.
    pub fn delta(grid: Grid, measure: Measure) -> Self {
        let mut t = Self::zeros(grid, measure);
        t.values[0] = ComplexValue::new(1.0, 0.0);
        t
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn values(&self) -> &[ComplexValue] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [ComplexValue] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<ComplexValue> {
        self.values
    }

    pub fn get(&self, idx: usize) -> ComplexValue {
        self.values[idx]
    }

    pub fn at(&self, coords: &[u32]) -> ComplexValue {
        self.values[self.grid.index(coords)]
    }

    pub fn expect_measure(&self, expected: Measure) -> Result<(), SpectrumError> {
        if self.measure != expected {
            return Err(SpectrumError::MeasureMismatch { expected, got: self.measure });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &SpectralTable) -> Result<(), SpectrumError> {
        if self.grid != other.grid {
            return Err(SpectrumError::GridMismatch);
        }
        other.expect_measure(self.measure)
    }

    pub fn add(&self, other: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &SpectralTable,
        f: impl Fn(ComplexValue, ComplexValue) -> ComplexValue,
    ) -> Result<SpectralTable, SpectrumError> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SpectralTable { grid: self.grid, measure: self.measure, values })
    }

    pub fn scale(&self, c: f64) -> SpectralTable {
        SpectralTable { grid: self.grid, measure: self.measure, values: self.values.iter().map(|&v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `L^r` norm under the table's own measure; `r = ∞` gives the sup norm.
    pub fn norm(&self, r: f64) -> f64 {
        let weight = match self.measure {
            Measure::Space => 1.0 / self.grid.size() as f64,
            Measure::Frequency => 1.0,
        };
        lr_norm(self.values.iter().map(|v| v.norm()), r, weight)
    }
}

/// `(weight · Σ aᵢ^r)^{1/r}` for nonnegative `aᵢ`, or `max aᵢ` when `r = ∞`.
pub fn lr_norm(abs_values: impl Iterator<Item = f64>, r: f64, weight: f64) -> f64 {
    if r.is_infinite() {
        return abs_values.fold(0.0, f64::max);
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for a in abs_values {
        let y = a.powf(r) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    (weight * sum).powf(1.0 / r)
}

/// In-place `v(j) ← Σ_i χ(sign·i·j) v(i)` along every axis.
fn axis_transform(grid: &Grid, values: &mut [ComplexValue], negate: bool) {
    let p = grid.p() as usize;
    let roots = RootTable::new(&grid.field());
    let mut pencil = vec![ComplexValue::new(0.0, 0.0); p];
    let mut stride = 1usize;
    for _ in 0..grid.dim() {
        let block = stride * p;
        for base in (0..grid.size()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in pencil.iter_mut().enumerate() {
                    *slot = values[start + i * stride];
                }
                for j in 0..p {
                    let mut acc = CompensatedSum::new();
                    let mut k = 0usize;
                    for &v in &pencil {
                        acc.add(v * roots.get(if negate && k != 0 { p - k } else { k }));
                        k += j;
                        if k >= p {
                            k -= p;
                        }
                    }
                    values[start + j * stride] = acc.value();
                }
            }
        }
        stride = block;
    }
}

/// `f̂(m) = q^{-d} Σ_x χ(−m·x) f(x)`, space side to frequency side.
pub fn fourier_forward(f: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
    f.expect_measure(Measure::Space)?;
    let mut values = f.values.clone();
    axis_transform(&f.grid, &mut values, true);
    let scale = 1.0 / f.grid.size() as f64;
    for v in &mut values {
        *v *= scale;
    }
    Ok(SpectralTable { grid: f.grid, measure: Measure::Frequency, values })
}

/// `g^∨(x) = Σ_m χ(m·x) g(m)`, frequency side to space side.
pub fn fourier_inverse(g: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
    g.expect_measure(Measure::Frequency)?;
    let mut values = g.values.clone();
    axis_transform(&g.grid, &mut values, false);
    Ok(SpectralTable { grid: g.grid, measure: Measure::Space, values })
}

/// The unnormalized transform of a frequency-side function,
/// `ĝ(x) = Σ_m χ(−m·x) g(m)`, evaluated on the space side.
pub fn frequency_hat(g: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
    g.expect_measure(Measure::Frequency)?;
    let mut values = g.values.clone();
    axis_transform(&g.grid, &mut values, true);
    Ok(SpectralTable { grid: g.grid, measure: Measure::Space, values })
}

/// `Ĥ(m) = (q·|H ∩ Π_m| − |H|) / (q^{d+1} − q^d)` for a homogeneous zero set and `m ≠ 0`.
pub fn variety_fourier_formula(h: &VarietySlice, m: &[u32]) -> Result<f64, SpectrumError> {
    if !h.is_homogeneous() {
        return Err(SpectrumError::NotHomogeneous);
    }
    let p = h.field().modulus();
    if m.iter().all(|&c| c % p == 0) {
        return Err(SpectrumError::ZeroFrequency);
    }
    let spec = crate::variety::HyperplaneSpec::new(&h.field(), m).map_err(|_| SpectrumError::ZeroFrequency)?;
    let count = crate::variety::hyperplane_intersection_count(h, &spec);
    Ok(closed_form_value(h, count))
}

fn closed_form_value(h: &VarietySlice, intersection: usize) -> f64 {
    let q = h.field().q();
    let qd = q.powi(h.dim() as i32);
    (q * intersection as f64 - h.len() as f64) / (qd * q - qd)
}

/// One row of a decay histogram: every `m ≠ 0` whose hyperplane meets `H` in
/// `intersection` points has `Ĥ(m) = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayBin {
    pub intersection: usize,
    pub value: f64,
    /// Number of projective classes of normals.
    pub classes: usize,
    /// Number of nonzero frequencies (`classes · (q − 1)`).
    pub frequencies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `max_{m≠0} |Ĥ(m)|`.
    pub max_abs: f64,
    pub argmax: Vec<u32>,
    /// Bins in increasing order of intersection size.
    pub histogram: Vec<DecayBin>,
}

impl DecayProfile {
    /// `max |Ĥ(m)|` rescaled by `q^{d−1}`, the size of the expected decay.
    pub fn normalized_max(&self, q: f64, dim: usize) -> f64 {
        self.max_abs * q.powi(dim as i32 - 1)
    }
}

/// `max_{m≠0} |Ĥ(m)|` through the closed formula, one hyperplane count per
/// projective class of normals.
pub fn decay_profile(h: &VarietySlice) -> Result<DecayProfile, SpectrumError> {
    if !h.is_homogeneous() {
        return Err(SpectrumError::NotHomogeneous);
    }
    let units = h.field().modulus() as usize - 1;
    let mut bins: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut best = (-1.0f64, Vec::new());
    for (m, count) in projective_intersection_counts(h) {
        *bins.entry(count).or_default() += 1;
        let v = closed_form_value(h, count).abs();
        if v > best.0 {
            best = (v, m);
        }
    }
    let histogram = bins
        .into_iter()
        .map(|(intersection, classes)| DecayBin {
            intersection,
            value: closed_form_value(h, intersection),
            classes,
            frequencies: classes * units,
        })
        .collect();
    Ok(DecayProfile { max_abs: best.0, argmax: best.1, histogram })
}

/// `(f dσ)^∨(m) = |H|⁻¹ Σ_{x∈H} χ(m·x) f(x)` for `f` given on the carrier
/// points in the order of [`VarietySlice::indices`].
pub fn extension_transform(h: &VarietySlice, f: &[ComplexValue]) -> Result<SpectralTable, SpectrumError> {
    if h.is_empty() {
        return Err(SpectrumError::EmptyCarrier);
    }
    if f.len() != h.len() {
        return Err(SpectrumError::Length { expected: h.len(), got: f.len() });
    }
    let grid = *h.grid();
    let mut values = vec![ComplexValue::new(0.0, 0.0); grid.size()];
    for (&i, &v) in h.indices().iter().zip(f) {
        values[i] = v;
    }
    axis_transform(&grid, &mut values, false);
    let scale = 1.0 / h.len() as f64;
    for v in &mut values {
        *v *= scale;
    }
    Ok(SpectralTable { grid, measure: Measure::Frequency, values })
}

/// [`extension_transform`] for a function given on the whole space side; it
/// must vanish off the carrier.
pub fn extension_transform_table(h: &VarietySlice, f: &SpectralTable) -> Result<SpectralTable, SpectrumError> {
    f.expect_measure(Measure::Space)?;
    if f.grid() != h.grid() {
        return Err(SpectrumError::GridMismatch);
    }
    if let Some(i) = f.values.iter().enumerate().position(|(i, v)| v.norm() > 0.0 && !h.contains_index(i)) {
        return Err(SpectrumError::OffCarrier(i));
    }
    let on: Vec<ComplexValue> = h.indices().iter().map(|&i| f.values[i]).collect();
    extension_transform(h, &on)
}

/// The normalized surface measure `dσ = q^d |H|⁻¹ H dx` of a nonempty carrier.
#[derive(Debug, Clone)]
pub struct SurfaceMeasure {
    carrier: VarietySlice,
}

impl SurfaceMeasure {
    pub fn new(carrier: VarietySlice) -> Result<Self, SpectrumError> {
        if carrier.is_empty() {
            return Err(SpectrumError::EmptyCarrier);
        }
        Ok(SurfaceMeasure { carrier })
    }

    pub fn carrier(&self) -> &VarietySlice {
        &self.carrier
    }

    /// Density with respect to `dx`: `q^d / |H|` on the carrier.
    pub fn density(&self) -> SpectralTable {
        let grid = *self.carrier.grid();
        SpectralTable::indicator(&self.carrier).scale(grid.size() as f64 / self.carrier.len() as f64)
    }

    /// `(dσ)^∨`, the extension transform of the constant 1.
    pub fn inverse_transform(&self) -> SpectralTable {
        let ones = vec![ComplexValue::new(1.0, 0.0); self.carrier.len()];
        extension_transform(&self.carrier, &ones).expect("carrier is nonempty and lengths agree")
    }

    /// Total mass, `(dσ)^∨(0)`.
    pub fn mass(&self) -> f64 {
        self.density().values.iter().map(|v| v.re).sum::<f64>() / self.carrier.grid().size() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::{additive_character, PrimeField};
    use crate::mpoly::{parse_poly, random_homogeneous};
    use crate::variety::{enumerate_level_set, line_decomposition};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_set(text: &str, d: usize, p: u32) -> VarietySlice {
        let field = PrimeField::new(p).unwrap();
        let poly = parse_poly(text, d, field).unwrap();
        enumerate_level_set(&poly, field.zero(), field).unwrap()
    }

    fn grid(p: u32, d: usize) -> Grid {
        Grid::new(PrimeField::new(p).unwrap(), d).unwrap()
    }

    /// Direct O(q^{2d}) transform with an explicit sign and scale.
    fn brute_dft(grid: &Grid, values: &[ComplexValue], sign: i64, scale: f64) -> Vec<ComplexValue> {
        let field = grid.field();
        (0..grid.size())
            .map(|m| {
                let mut acc = ComplexValue::new(0.0, 0.0);
                for (x, &v) in values.iter().enumerate() {
                    acc += additive_character(&field, field.elem(sign * grid.dot(m, x) as i64)) * v;
                }
                acc * scale
            })
            .collect()
    }

    fn random_table<R: Rng>(grid: Grid, measure: Measure, rng: &mut R) -> SpectralTable {
        let values = (0..grid.size())
            .map(|_| ComplexValue::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralTable::new(grid, measure, values).unwrap()
    }

    fn max_diff(a: &[ComplexValue], b: &[ComplexValue]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn forward_of_constant_and_delta() {
        let g = grid(5, 3);
        let one = SpectralTable::from_real(g, Measure::Space, &vec![1.0; g.size()]).unwrap();
        let hat = fourier_forward(&one).unwrap();
        assert!((hat.get(0) - 1.0).norm() < 1e-12);
        assert!(hat.values()[1..].iter().all(|v| v.norm() < 1e-12));
        let delta = fourier_forward(&SpectralTable::delta(g, Measure::Space)).unwrap();
        assert!(delta.values().iter().all(|v| (v - 1.0 / 125.0).norm() < 1e-15));
    }

    #[test]
    fn transforms_match_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, d) in [(3, 2), (5, 3), (7, 2), (3, 4)] {
            let g = grid(p, d);
            let f = random_table(g, Measure::Space, &mut rng);
            let oracle = brute_dft(&g, f.values(), -1, 1.0 / g.size() as f64);
            assert!(max_diff(fourier_forward(&f).unwrap().values(), &oracle) < 1e-12);
            let h = random_table(g, Measure::Frequency, &mut rng);
            assert!(max_diff(fourier_inverse(&h).unwrap().values(), &brute_dft(&g, h.values(), 1, 1.0)) < 1e-11);
            assert!(max_diff(frequency_hat(&h).unwrap().values(), &brute_dft(&g, h.values(), -1, 1.0)) < 1e-11);
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in [3u32, 5, 7] {
            let g = grid(p, 3);
            for _ in 0..100 {
                let f = random_table(g, Measure::Space, &mut rng);
                let hat = fourier_forward(&f).unwrap();
                let back = fourier_inverse(&hat).unwrap();
                assert!(max_diff(back.values(), f.values()) <= 1e-9);
                let lhs: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum();
                let rhs: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
                assert!((lhs - rhs).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plancherel_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid(5, 3);
        for _ in 0..20 {
            let e: Vec<f64> = (0..g.size()).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect();
            let size: f64 = e.iter().sum();
            let hat = fourier_forward(&SpectralTable::from_real(g, Measure::Space, &e).unwrap()).unwrap();
            let lhs: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum();
            assert!((lhs - size / 125.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_of_delta_is_constant_one() {
        let g = grid(5, 3);
        let t = fourier_inverse(&SpectralTable::delta(g, Measure::Frequency)).unwrap();
        assert!(t.values().iter().all(|v| (v - 1.0).norm() < 1e-15));
    }

    #[test]
    fn inverse_recovers_indicator() {
        let h = zero_set("x1^2 - x2*x3", 3, 5);
        let ind = SpectralTable::indicator(&h);
        let back = fourier_inverse(&fourier_forward(&ind).unwrap()).unwrap();
        assert!(max_diff(back.values(), ind.values()) < 1e-12);
    }

    #[test]
    fn measure_tags_are_enforced() {
        let g = grid(3, 2);
        let f = SpectralTable::delta(g, Measure::Space);
        let m = SpectralTable::delta(g, Measure::Frequency);
        assert_eq!(
            fourier_inverse(&f),
            Err(SpectrumError::MeasureMismatch { expected: Measure::Frequency, got: Measure::Space })
        );
        assert!(fourier_forward(&m).is_err());
        assert!(f.add(&m).is_err());
        assert!(SpectralTable::new(g, Measure::Space, vec![]).is_err());
    }

    #[test]
    fn norms_follow_the_measure() {
        let g = grid(3, 2);
        let s = SpectralTable::delta(g, Measure::Space);
        assert!((s.norm(2.0) - (1.0f64 / 9.0).sqrt()).abs() < 1e-15);
        let f = SpectralTable::delta(g, Measure::Frequency);
        assert_eq!(f.norm(2.0), 1.0);
        assert_eq!(f.norm(f64::INFINITY), 1.0);
    }

    #[test]
    fn closed_formula_examples() {
        let cone = zero_set("x1^2 - x2*x3", 3, 5);
        assert_eq!(variety_fourier_formula(&cone, &[0, 0, 1]).unwrap(), 0.0);
        let hat = fourier_forward(&SpectralTable::indicator(&cone)).unwrap();
        let v = variety_fourier_formula(&cone, &[1, 0, 0]).unwrap();
        assert!((hat.at(&[1, 0, 0]) - v).norm() < 1e-12);
        assert_eq!(variety_fourier_formula(&cone, &[0, 0, 0]), Err(SpectrumError::ZeroFrequency));
        let plane = zero_set("x1 + x2 + x3", 3, 5);
        assert!((variety_fourier_formula(&plane, &[1, 1, 1]).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn closed_formula_matches_transform_for_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in [3u32, 5, 7, 11] {
            let field = PrimeField::new(p).unwrap();
            for _ in 0..20 {
                let deg = rng.random_range(1..=4);
                let poly = random_homogeneous(field, 3, deg, 4, &mut rng);
                let h = enumerate_level_set(&poly, field.zero(), field).unwrap();
                let hat = fourier_forward(&SpectralTable::indicator(&h)).unwrap();
                let g = *h.grid();
                for m in 1..g.size() {
                    let v = variety_fourier_formula(&h, &g.coords(m)).unwrap();
                    assert!((hat.get(m) - v).norm() < 1e-9, "p={p} {poly} m={m}");
                }
            }
        }
    }

    #[test]
    fn transform_is_scalar_invariant() {
        for text in ["x1^2 - x2*x3", "x1^3 + x2^3 + x3^3", "x1^4 + x2^2*x3^2"] {
            let h = zero_set(text, 3, 7);
            let g = *h.grid();
            let hat = fourier_forward(&SpectralTable::indicator(&h)).unwrap();
            for m in 1..g.size() {
                for t in 2..7 {
                    assert!((hat.get(g.scale(m, t)) - hat.get(m)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cone_decay_is_exactly_inverse_square() {
        for p in [3u32, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let h = zero_set("x1^2 - x2*x3", 3, p);
            let prof = decay_profile(&h).unwrap();
            let q = p as f64;
            assert!((q * q * prof.max_abs - 1.0).abs() < 1e-6, "p={p}");
            let sizes: Vec<usize> = prof.histogram.iter().map(|b| b.intersection).collect();
            assert_eq!(sizes, vec![1, p as usize, 2 * p as usize - 1]);
            let classes: usize = prof.histogram.iter().map(|b| b.classes).sum();
            assert_eq!(classes, (p * p + p + 1) as usize);
        }
    }

    #[test]
    fn decay_profile_matches_full_transform() {
        for (text, p) in [("x1^2 - x2*x3", 5u32), ("x1^3 + x2^3 + x3^3", 7), ("x1^2 + x2^2 + x3^2", 11)] {
            let h = zero_set(text, 3, p);
            let hat = fourier_forward(&SpectralTable::indicator(&h)).unwrap();
            let direct = hat.values()[1..].iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!((decay_profile(&h).unwrap().max_abs - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_of_plane_and_fermat_cubic() {
        let plane = zero_set("x1 + x2 + x3", 3, 7);
        let prof = decay_profile(&plane).unwrap();
        assert!((49.0 * prof.max_abs - 7.0).abs() < 1e-9);
        assert_eq!(prof.argmax, vec![1, 1, 1]);
        let fermat = zero_set("x1^3 + x2^3 + x3^3", 3, 7);
        assert!(49.0 * decay_profile(&fermat).unwrap().max_abs <= 3.0);
    }

    #[test]
    fn extension_transform_examples() {
        let cone = zero_set("x1^2 - x2*x3", 3, 5);
        let n = cone.len();
        let sigma = SurfaceMeasure::new(cone.clone()).unwrap();
        assert!((sigma.inverse_transform().get(0) - 1.0).norm() < 1e-12);
        assert!((sigma.mass() - 1.0).abs() < 1e-12);

        let mut delta = vec![ComplexValue::new(0.0, 0.0); n];
        delta[3] = ComplexValue::new(1.0, 0.0);
        let t = extension_transform(&cone, &delta).unwrap();
        assert!(t.values().iter().all(|v| (v.norm() - 1.0 / n as f64).abs() < 1e-12));

        let g = *cone.grid();
        let line = &line_decomposition(&cone).unwrap().lines[2];
        let on_line: Vec<usize> = (0..5).map(|s| g.scale(g.index(line), s)).collect();
        let f: Vec<ComplexValue> =
            cone.indices().iter().map(|i| ComplexValue::new(on_line.contains(i) as u8 as f64, 0.0)).collect();
        let t = extension_transform(&cone, &f).unwrap();
        let dir = g.index(line);
        let mut perp = 0;
        for m in 0..g.size() {
            let expected = if g.dot(m, dir) == 0 {
                perp += 1;
                5.0 / n as f64
            } else {
                0.0
            };
            assert!((t.get(m).norm() - expected).abs() < 1e-12);
        }
        assert_eq!(perp, 25);
    }

    #[test]
    fn extension_transform_rejects_off_carrier_input() {
        let cone = zero_set("x1^2 - x2*x3", 3, 5);
        let g = *cone.grid();
        let bad = SpectralTable::delta(g, Measure::Space);
        assert!(extension_transform_table(&cone, &bad).is_ok());
        let off = g.index(&[1, 0, 0]);
        let mut t = SpectralTable::zeros(g, Measure::Space);
        t.values_mut()[off] = ComplexValue::new(1.0, 0.0);
        assert_eq!(extension_transform_table(&cone, &t), Err(SpectrumError::OffCarrier(off)));
        assert!(extension_transform(&cone, &[]).is_err());
    }

    proptest! {
        #[test]
        fn surface_measure_has_unit_mass(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5, 7])) {
            let field = PrimeField::new(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let deg = rng.random_range(1..=3);
            let poly = random_homogeneous(field, 3, deg, 3, &mut rng);
            let h = enumerate_level_set(&poly, field.zero(), field).unwrap();
            let sigma = SurfaceMeasure::new(h).unwrap();
            prop_assert!((sigma.inverse_transform().get(0) - 1.0).norm() < 1e-12);
        }
    }
}
