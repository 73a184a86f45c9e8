//! Generalized distance sets `Δ_P(E,F) = {P(x − y) : x ∈ E, y ∈ F}` and the
//! counting function `ν(t) = |{(x,y) ∈ E×F : P(x−y) = t}|`.

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::{ComplexValue, FieldElement, PrimeField};
use crate::grid::{Grid, GridError};
use crate::mpoly::Poly;
use crate::seed::stream_rng;
use crate::spectrum::{fourier_forward, Measure, SpectralTable, SpectrumError};

/// Largest allowed gap between a spectral count and the nearest integer.
pub const ROUNDING_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("point sets and polynomial disagree on field or dimension")]
    Mismatch,
    #[error("point set is empty")]
    EmptySet,
    #[error("requested {size} points from a grid of {available}")]
    TooLarge { size: usize, available: usize },
    #[error("spectral count deviates from an integer by {0:e}")]
    RoundingGuard(f64),
    #[error("polynomial is not a diagonal form Σ aⱼxⱼ^s")]
    NotDiagonal,
    #[error("characteristic {p} divides the degree {degree}")]
    CharacteristicDividesDegree { p: u32, degree: u32 },
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("dimension {0} is odd")]
    OddDimension(usize),
    #[error("no u in F_{p} satisfies u^{c} = -1")]
    Unsatisfiable { p: u32, c: u32 },
}

/// A set of points of `F_p^d` stored as sorted, distinct grid indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet {
    p: u32,
    dim: usize,
    points: Vec<usize>,
}

impl PointSet {
    pub fn from_indices(grid: &Grid, mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        assert!(points.last().is_none_or(|&i| i < grid.size()), "index outside the grid");
        PointSet { p: grid.p(), dim: grid.dim(), points }
    }

    /// Points given by coordinates, reduced mod `p`.
    pub fn from_coords<'a>(grid: &Grid, coords: impl IntoIterator<Item = &'a [u32]>) -> Self {
        Self::from_indices(grid, coords.into_iter().map(|x| grid.index(x)).collect())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(PrimeField::new(self.p).expect("stored modulus is prime"), self.dim).expect("stored grid fits")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.points
    }

    /// `E + v`.
    pub fn translate(&self, v: &[u32]) -> PointSet {
        let grid = self.grid();
        let shift = grid.index(v);
        Self::from_indices(&grid, self.points.iter().map(|&x| grid.add(x, shift)).collect())
    }

    fn indicator(&self, grid: Grid) -> SpectralTable {
        let mut t = SpectralTable::zeros(grid, Measure::Space);
        for &i in &self.points {
            t.values_mut()[i] = ComplexValue::new(1.0, 0.0);
        }
        t
    }
}

/// `ν(t)` for every `t ∈ F_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceCounts {
    pub nu: Vec<u64>,
}

impl DistanceCounts {
    pub fn total(&self) -> u64 {
        self.nu.iter().sum()
    }

    /// The support of `ν`, i.e. `Δ_P(E,F)`.
    pub fn distance_set(&self) -> Vec<u32> {
        self.nu.iter().enumerate().filter(|&(_, &n)| n > 0).map(|(t, _)| t as u32).collect()
    }

    pub fn max(&self) -> u64 {
        self.nu.iter().copied().max().unwrap_or(0)
    }
}

fn check(poly: &Poly, e: &PointSet, f: &PointSet) -> Result<Grid, DistanceError> {
    let p = poly.field().modulus();
    if e.p != p || f.p != p || e.dim != poly.nvars() || f.dim != poly.nvars() {
        return Err(DistanceError::Mismatch);
    }
    Ok(Grid::new(poly.field(), poly.nvars())?)
}

/// Direct count over `E × F`.
pub fn counting_function(poly: &Poly, e: &PointSet, f: &PointSet) -> Result<DistanceCounts, DistanceError> {
    let grid = check(poly, e, f)?;
    let values = poly.value_table(&grid);
    let mut nu = vec![0u64; grid.p() as usize];
    for &x in e.indices() {
        for &y in f.indices() {
            nu[values[grid.sub(x, y)].value() as usize] += 1;
        }
    }
    Ok(DistanceCounts { nu })
}

/// Transforms `Ĥ_t` of every level set of `P`, computed once and reused for
/// any number of pairs `(E, F)`.
#[derive(Debug, Clone)]
pub struct LevelSpectra {
    grid: Grid,
    level_sizes: Vec<usize>,
    hats: Vec<SpectralTable>,
}

impl LevelSpectra {
    pub fn new(poly: &Poly) -> Result<Self, DistanceError> {
        let field = poly.field();
        let grid = Grid::new(field, poly.nvars())?;
        let values = poly.value_table(&grid);
        let mut level_sizes = vec![0usize; field.modulus() as usize];
        let mut hats = Vec::with_capacity(level_sizes.len());
        for t in 0..field.modulus() {
            let ind: Vec<f64> = values.iter().map(|v| (v.value() == t) as u8 as f64).collect();
            level_sizes[t as usize] = ind.iter().filter(|&&v| v > 0.0).count();
            hats.push(fourier_forward(&SpectralTable::from_real(grid, Measure::Space, &ind)?)?);
        }
        Ok(LevelSpectra { grid, level_sizes, hats })
    }

    /// `|H_t|` for each `t`.
    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }
}

/// Spectral counts together with the leading term of the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCounts {
    pub counts: DistanceCounts,
    /// The `m = 0` term `q^{-d}|E||F||H_t|` for each `t`.
    pub main_term: Vec<f64>,
    /// Largest distance of a pre-rounding value from its integer.
    pub max_deviation: f64,
}

/// `ν(t) = q^{2d} Σ_m conj(Ê(m)) F̂(m) Ĥ_t(m)`.
pub fn counting_function_spectral(poly: &Poly, e: &PointSet, f: &PointSet) -> Result<SpectralCounts, DistanceError> {
    check(poly, e, f)?;
    counting_function_with(&LevelSpectra::new(poly)?, e, f)
}

/// [`counting_function_spectral`] with precomputed level-set transforms.
pub fn counting_function_with(
    spectra: &LevelSpectra,
    e: &PointSet,
    f: &PointSet,
) -> Result<SpectralCounts, DistanceError> {
    let grid = spectra.grid;
    if e.p != grid.p() || f.p != grid.p() || e.dim != grid.dim() || f.dim != grid.dim() {
        return Err(DistanceError::Mismatch);
    }
    let e_hat = fourier_forward(&e.indicator(grid))?;
    let f_hat = fourier_forward(&f.indicator(grid))?;
    let cross: Vec<ComplexValue> = e_hat.values().iter().zip(f_hat.values()).map(|(a, b)| a.conj() * b).collect();
    let scale = (grid.size() as f64).powi(2);
    let mut nu = Vec::with_capacity(spectra.hats.len());
    let mut max_deviation = 0.0f64;
    for hat in &spectra.hats {
        let mut acc = crate::ffield::CompensatedSum::new();
        for (c, h) in cross.iter().zip(hat.values()) {
            acc.add(c * h);
        }
        let v = acc.value() * scale;
        let rounded = v.re.round();
        max_deviation = max_deviation.max((v.re - rounded).abs()).max(v.im.abs());
        nu.push(rounded.max(0.0) as u64);
    }
    if max_deviation > ROUNDING_GUARD {
        return Err(DistanceError::RoundingGuard(max_deviation));
    }
    let ef = (e.len() * f.len()) as f64;
    let main_term = spectra.level_sizes.iter().map(|&h| ef * h as f64 / grid.size() as f64).collect();
    Ok(SpectralCounts { counts: DistanceCounts { nu }, main_term, max_deviation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalconerRatio {
    /// `|Δ_P(E,F)| / min(q, q^{−(d−1)/2} √(|E||F|))`.
    pub ratio: f64,
    pub distances: usize,
    pub bound: f64,
    /// Set outside dimension 3, where the lower bound is only conjectured.
    pub conjectural: bool,
}

pub fn falconer_ratio(poly: &Poly, e: &PointSet, f: &PointSet) -> Result<FalconerRatio, DistanceError> {
    if e.is_empty() || f.is_empty() {
        return Err(DistanceError::EmptySet);
    }
    let counts = counting_function(poly, e, f)?;
    let q = poly.field().q();
    let d = poly.nvars() as f64;
    let bound = q.min(q.powf(-(d - 1.0) / 2.0) * ((e.len() * f.len()) as f64).sqrt());
    let distances = counts.distance_set().len();
    Ok(FalconerRatio { ratio: distances as f64 / bound, distances, bound, conjectural: poly.nvars() != 3 })
}

/// `max_t ν(t) / (q⁻¹|E||F| + q^{(d−1)/2} √(|E||F|))` for a diagonal form in
/// dimension 3 whose degree is prime to the characteristic.
pub fn max_nu_bound_check(poly: &Poly, e: &PointSet, f: &PointSet) -> Result<f64, DistanceError> {
    if poly.nvars() != 3 {
        return Err(DistanceError::WrongDimension { expected: 3, got: poly.nvars() });
    }
    let (s, _) = poly.as_diagonal().ok_or(DistanceError::NotDiagonal)?;
    let p = poly.field().modulus();
    if p.gcd(&s) != 1 {
        return Err(DistanceError::CharacteristicDividesDegree { p, degree: s });
    }
    let counts = counting_function(poly, e, f)?;
    let q = poly.field().q();
    let ef = (e.len() * f.len()) as f64;
    let scale = ef / q + q * ef.sqrt();
    Ok(if scale > 0.0 { counts.max() as f64 / scale } else { 0.0 })
}

/// `E = F = {(t₁, u t₁, …, t_{d/2}, u t_{d/2})}` with `u^c = −1`, on which
/// `Σ xⱼ^c` vanishes identically.
pub fn isotropic_counterexample(field: PrimeField, d: usize, c: u32) -> Result<(PointSet, PointSet), DistanceError> {
    if d % 2 == 1 {
        return Err(DistanceError::OddDimension(d));
    }
    let minus_one = field.neg(field.one());
    let u = field
        .elements()
        .find(|&u| field.pow(u, c as u64) == minus_one)
        .ok_or(DistanceError::Unsatisfiable { p: field.modulus(), c })?;
    let grid = Grid::new(field, d)?;
    let half = Grid::new(field, d / 2)?;
    let mut coords = vec![0u32; d];
    let mut t = vec![0u32; d / 2];
    let points = (0..half.size())
        .map(|k| {
            half.decode_into(k, &mut t);
            for (j, &tj) in t.iter().enumerate() {
                coords[2 * j] = tj;
                coords[2 * j + 1] = field.mul(u, FieldElement(tj)).value();
            }
            grid.index(&coords)
        })
        .collect();
    let e = PointSet::from_indices(&grid, points);
    Ok((e.clone(), e))
}

/// `size` distinct points drawn uniformly; deterministic in `seed`.
pub fn random_point_set(field: PrimeField, d: usize, size: usize, seed: u64) -> Result<PointSet, DistanceError> {
    let grid = Grid::new(field, d)?;
    if size > grid.size() {
        return Err(DistanceError::TooLarge { size, available: grid.size() });
    }
    let mut rng = stream_rng(seed, 0);
    Ok(PointSet::from_indices(&grid, rand::seq::index::sample(&mut rng, grid.size(), size).into_vec()))
}

/// One random pair in a distance-set sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalconerTrial {
    pub trial: u64,
    pub seed: u64,
    /// Seeds that regenerate `E` and `F` through [`random_point_set`].
    pub seed_e: u64,
    pub seed_f: u64,
    pub size_e: usize,
    pub size_f: usize,
    pub ratio: FalconerRatio,
}

/// Random pairs `(E, F)` with sizes drawn log-uniformly from `[q, 2q²]`,
/// raised where needed so that `|E||F| ≥ q²`.
pub fn falconer_trials(poly: &Poly, trials: u64, seed: u64) -> Result<Vec<FalconerTrial>, DistanceError> {
    let field = poly.field();
    let d = poly.nvars();
    let grid = Grid::new(field, d)?;
    let q = field.q();
    let (lo, hi) = (q.ln(), (2.0 * q * q).min(grid.size() as f64).ln());
    (0..trials)
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let size_e = rng.random_range(lo..=hi).exp().round() as usize;
            let size_f =
                (rng.random_range(lo..=hi).exp().round() as usize).max((q * q / size_e as f64).ceil() as usize);
            let (seed_e, seed_f) = (rng.random(), rng.random());
            let e = random_point_set(field, d, size_e.min(grid.size()), seed_e)?;
            let f = random_point_set(field, d, size_f.min(grid.size()), seed_f)?;
            let ratio = falconer_ratio(poly, &e, &f)?;
            Ok(FalconerTrial { trial, seed, seed_e, seed_f, size_e: e.len(), size_f: f.len(), ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::parse_poly;

    fn field(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn sphere(p: u32) -> Poly {
        parse_poly("x1^2 + x2^2 + x3^2", 3, field(p)).unwrap()
    }

    fn origin(p: u32, d: usize) -> PointSet {
        PointSet::from_indices(&Grid::new(field(p), d).unwrap(), vec![0])
    }

    /// Independent count: explicit coordinates, no grid index arithmetic.
    fn brute_nu(poly: &Poly, e: &PointSet, f: &PointSet) -> Vec<u64> {
        let grid = e.grid();
        let p = grid.p();
        let mut nu = vec![0u64; p as usize];
        for &x in e.indices() {
            for &y in f.indices() {
                let (cx, cy) = (grid.coords(x), grid.coords(y));
                let z: Vec<u32> = cx.iter().zip(&cy).map(|(a, b)| (a + p - b) % p).collect();
                nu[poly.evaluate(&z).unwrap().value() as usize] += 1;
            }
        }
        nu
    }

    #[test]
    fn counting_examples() {
        let p = sphere(5);
        let o = origin(5, 3);
        let c = counting_function(&p, &o, &o).unwrap();
        assert_eq!(c.nu, vec![1, 0, 0, 0, 0]);
        let grid = Grid::new(field(5), 3).unwrap();
        let all = PointSet::from_indices(&grid, (0..125).collect());
        assert_eq!(counting_function(&p, &all, &all).unwrap().total(), 5u64.pow(6));
        let line: Vec<Vec<u32>> = (0..5).map(|t| vec![t, 2 * t % 5, 0]).collect();
        let l = PointSet::from_coords(&grid, line.iter().map(|v| v.as_slice()));
        let c = counting_function(&p, &l, &l).unwrap();
        assert_eq!(c.nu[0], 25);
        assert_eq!(c.distance_set(), vec![0]);
    }

    #[test]
    fn spectral_route_matches_direct_counts() {
        for p in [5u32, 7] {
            let poly = sphere(p);
            let spectra = LevelSpectra::new(&poly).unwrap();
            for trial in 0..10 {
                let e = random_point_set(field(p), 3, 5 + 7 * trial as usize, trial).unwrap();
                let f = random_point_set(field(p), 3, 40, 100 + trial).unwrap();
                let direct = counting_function(&poly, &e, &f).unwrap();
                assert_eq!(direct.nu, brute_nu(&poly, &e, &f));
                let spectral = counting_function_with(&spectra, &e, &f).unwrap();
                assert_eq!(spectral.counts, direct);
                assert_eq!(direct.total(), (e.len() * f.len()) as u64);
            }
        }
        let o = origin(5, 3);
        let s = counting_function_spectral(&sphere(5), &o, &o).unwrap();
        assert_eq!(s.counts.nu, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn main_term_has_the_expected_scale() {
        let poly = sphere(7);
        let e = random_point_set(field(7), 3, 100, 1).unwrap();
        let f = random_point_set(field(7), 3, 120, 2).unwrap();
        let s = counting_function_spectral(&poly, &e, &f).unwrap();
        let levels = LevelSpectra::new(&poly).unwrap();
        for (t, &m) in s.main_term.iter().enumerate() {
            assert!((m - 12000.0 * levels.level_sizes()[t] as f64 / 343.0).abs() < 1e-9);
            // |H_t| ≈ q² so the main term is ≈ q⁻¹|E||F|.
            assert!(m > 0.5 * 12000.0 / 7.0 && m < 2.0 * 12000.0 / 7.0);
        }
    }

    #[test]
    fn counts_are_translation_invariant() {
        let poly = parse_poly("x1^3 + x2^3 + x3^3", 3, field(7)).unwrap();
        let e = random_point_set(field(7), 3, 30, 5).unwrap();
        let f = random_point_set(field(7), 3, 30, 6).unwrap();
        let base = counting_function(&poly, &e, &f).unwrap();
        for v in [[1, 2, 3], [6, 0, 5]] {
            assert_eq!(counting_function(&poly, &e.translate(&v), &f.translate(&v)).unwrap(), base);
        }
    }

    #[test]
    fn falconer_ratio_examples() {
        for p in [5u32, 7] {
            let grid = Grid::new(field(p), 3).unwrap();
            let all = PointSet::from_indices(&grid, (0..grid.size()).collect());
            let r = falconer_ratio(&sphere(p), &all, &all).unwrap();
            assert_eq!(r.distances, p as usize);
            assert!((r.ratio - 1.0).abs() < 1e-12);
            let o = origin(p, 3);
            assert!((falconer_ratio(&sphere(p), &o, &o).unwrap().ratio - p as f64).abs() < 1e-12);
        }
        let empty = PointSet::from_indices(&Grid::new(field(5), 3).unwrap(), vec![]);
        assert_eq!(falconer_ratio(&sphere(5), &empty, &origin(5, 3)), Err(DistanceError::EmptySet));
        let r = falconer_ratio(&parse_poly("x1^2 + x2^2", 2, field(5)).unwrap(), &origin(5, 2), &origin(5, 2)).unwrap();
        assert!(r.conjectural);
    }

    #[test]
    fn falconer_trials_at_seven() {
        let poly = sphere(7);
        let min = (0..100)
            .map(|t| {
                let e = random_point_set(field(7), 3, 100, 2 * t).unwrap();
                let f = random_point_set(field(7), 3, 100, 2 * t + 1).unwrap();
                falconer_ratio(&poly, &e, &f).unwrap().ratio
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.2, "{min}");
        let trials = falconer_trials(&poly, 20, 3).unwrap();
        assert!(trials.iter().all(|t| t.size_e * t.size_f >= 49));
        assert_eq!(trials, falconer_trials(&poly, 20, 3).unwrap());
    }

    #[test]
    fn max_nu_constants() {
        let grid = Grid::new(field(5), 3).unwrap();
        let all = PointSet::from_indices(&grid, (0..125).collect());
        let c = max_nu_bound_check(&sphere(5), &all, &all).unwrap();
        assert!(c > 0.5 && c <= 1.5, "{c}");
        let o = origin(5, 3);
        assert!(max_nu_bound_check(&sphere(5), &o, &o).unwrap() <= 1.0);
        for p in [5u32, 7, 11] {
            let e = random_point_set(field(p), 3, 3 * p as usize, 1).unwrap();
            let f = random_point_set(field(p), 3, 4 * p as usize, 2).unwrap();
            assert!(max_nu_bound_check(&sphere(p), &e, &f).unwrap() <= 3.0);
        }
        let cubic = parse_poly("x1^3 + x2^3 + x3^3", 3, field(3)).unwrap();
        let o3 = origin(3, 3);
        assert_eq!(
            max_nu_bound_check(&cubic, &o3, &o3),
            Err(DistanceError::CharacteristicDividesDegree { p: 3, degree: 3 })
        );
        let cone = parse_poly("x1^2 - x2*x3", 3, field(5)).unwrap();
        assert_eq!(max_nu_bound_check(&cone, &o, &o), Err(DistanceError::NotDiagonal));
    }

    #[test]
    fn isotropic_counterexamples() {
        let (e, f) = isotropic_counterexample(field(5), 4, 2).unwrap();
        assert_eq!(e.len(), 25);
        let poly = parse_poly("x1^2 + x2^2 + x3^2 + x4^2", 4, field(5)).unwrap();
        assert_eq!(counting_function(&poly, &e, &f).unwrap().distance_set(), vec![0]);
        assert_eq!(isotropic_counterexample(field(7), 4, 2), Err(DistanceError::Unsatisfiable { p: 7, c: 2 }));
        assert_eq!(isotropic_counterexample(field(3), 4, 2), Err(DistanceError::Unsatisfiable { p: 3, c: 2 }));
        assert_eq!(isotropic_counterexample(field(5), 3, 2), Err(DistanceError::OddDimension(3)));
        let (e, _) = isotropic_counterexample(field(7), 4, 3).unwrap();
        let cubic = parse_poly("x1^3 + x2^3 + x3^3 + x4^3", 4, field(7)).unwrap();
        assert_eq!(counting_function(&cubic, &e, &e).unwrap().distance_set(), vec![0]);
    }

    #[test]
    fn random_sets() {
        let f5 = field(5);
        assert_eq!(random_point_set(f5, 3, 125, 1).unwrap().len(), 125);
        assert!(random_point_set(f5, 3, 0, 1).unwrap().is_empty());
        assert_eq!(random_point_set(f5, 3, 40, 9).unwrap(), random_point_set(f5, 3, 40, 9).unwrap());
        assert_ne!(random_point_set(f5, 3, 40, 9).unwrap(), random_point_set(f5, 3, 40, 10).unwrap());
        assert!(matches!(random_point_set(f5, 3, 126, 1), Err(DistanceError::TooLarge { .. })));
    }
}
