//! Extension and averaging operators on a variety: single-witness ratios,
//! randomized lower bounds for their operator norms, the `L²` norm by power
//! iteration, the Tomas–Stein kernel and exponent fits over prime sweeps.

mod ascent;
mod exponent;
mod region;

pub use ascent::{MAX_PASSES, STENCIL_MAGNITUDES, STENCIL_PHASES};
pub use exponent::{parse_reciprocal, ExponentError, ExponentPair, Rational};
pub use region::{
    averaging_region_verdict, averaging_region_vertices, extension_max_inv_r, extension_necessary_region,
    NecessaryVerdict, RegionVerdict,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::{ComplexValue, FieldError, PrimeField};
use crate::mpoly::{parse_poly, PolyError};
use crate::seed::stream_rng;
use crate::spectrum::{
    extension_transform, fourier_forward, fourier_inverse, frequency_hat, lr_norm, Measure, SpectralTable,
    SpectrumError, SurfaceMeasure,
};
use crate::variety::{
    enumerate_level_set, line_decomposition, projective_intersection_counts, VarietyError, VarietySlice,
};

use ascent::{coordinate_ascent, AveragingState, ExtensionGeneric, ExtensionL4};

type C = ComplexValue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpnormError {
    #[error("the test function vanishes identically")]
    ZeroDenominator,
    #[error("function has {got} values, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("budget must be at least 1")]
    EmptyBudget,
    #[error("carrier is empty")]
    EmptyCarrier,
    #[error("power iteration did not converge after {} iterations", history.len())]
    NonConvergence { history: Vec<f64> },
    #[error("exponent fits need at least 4 primes, got {0}")]
    TooFewPrimes(usize),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The test function behind a lower bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// Point mass at one carrier point.
    DeltaPoint {
        point: Vec<u32>,
    },
    /// Point mass at the origin.
    Spike,
    Constant,
    /// Indicator of the carrier (averaging side).
    CarrierIndicator,
    /// Indicator of the line through the origin with this direction.
    LineIndicator {
        direction: Vec<u32>,
    },
    /// Random start refined by coordinate ascent.
    Ascent {
        seed: u64,
        trial: u64,
        passes: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRatio {
    pub witness: Witness,
    pub ratio: f64,
}

/// A certified lower bound for an operator norm together with the function
/// attaining it. `lower_bound` is always the ratio recomputed from `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub pair: ExponentPair,
    pub lower_bound: f64,
    pub witness: Witness,
    /// Carrier-indexed for extension estimates, grid-indexed for averaging.
    pub values: Vec<C>,
    /// Number of single-coordinate trial evaluations spent in ascent.
    pub evaluations: usize,
    /// Every candidate tried, in order.
    pub trace: Vec<WitnessRatio>,
}

fn ratio_or_zero_denominator(num: f64, den: f64) -> Result<f64, OpnormError> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(OpnormError::ZeroDenominator)
    }
}

/// `‖f‖_{L^p(dσ)}` for `f` given on the carrier points.
fn surface_norm(f: &[C], p: f64) -> f64 {
    lr_norm(f.iter().map(|v| v.norm()), p, 1.0 / f.len() as f64)
}

/// `‖(f dσ)^∨‖_{L^r(dm)} / ‖f‖_{L^p(dσ)}` for `f` given on the carrier points
/// in the order of [`VarietySlice::indices`].
pub fn extension_ratio(h: &VarietySlice, f: &[C], pr: &ExponentPair) -> Result<f64, OpnormError> {
    if f.len() != h.len() {
        return Err(OpnormError::Length { expected: h.len(), got: f.len() });
    }
    let den = surface_norm(f, pr.p());
    if den == 0.0 {
        return Err(OpnormError::ZeroDenominator);
    }
    let num = extension_transform(h, f)?.norm(pr.r());
    ratio_or_zero_denominator(num, den)
}

/// `‖ĝ‖_{L^{p'}(H, dσ)} / ‖g‖_{L^{r'}(dm)}` with `ĝ(x) = Σ_m χ(−m·x) g(m)`.
pub fn restriction_ratio(h: &VarietySlice, g: &SpectralTable, pr: &ExponentPair) -> Result<f64, OpnormError> {
    g.expect_measure(Measure::Frequency)?;
    if h.is_empty() {
        return Err(OpnormError::EmptyCarrier);
    }
    let dual = pr.dual();
    let den = g.norm(dual.r());
    if den == 0.0 {
        return Err(OpnormError::ZeroDenominator);
    }
    let hat = frequency_hat(g)?;
    let on: Vec<C> = h.indices().iter().map(|&i| hat.get(i)).collect();
    ratio_or_zero_denominator(surface_norm(&on, dual.p()), den)
}

fn line_indicators(h: &VarietySlice) -> Vec<(Vec<u32>, Vec<C>)> {
    let Ok(dec) = line_decomposition(h) else {
        return Vec::new();
    };
    let grid = *h.grid();
    dec.lines
        .into_iter()
        .map(|dir| {
            let base = grid.index(&dir);
            let mut f = vec![C::new(0.0, 0.0); h.len()];
            for s in 0..grid.p() {
                let pos = h.position(grid.scale(base, s)).expect("line lies in the carrier");
                f[pos] = C::new(1.0, 0.0);
            }
            (dir, f)
        })
        .collect()
}

fn random_complex<R: Rng>(n: usize, rng: &mut R) -> Vec<C> {
    (0..n).map(|_| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

struct Search {
    pair: ExponentPair,
    best: Option<(f64, Witness, Vec<C>)>,
    trace: Vec<WitnessRatio>,
    evaluations: usize,
}

impl Search {
    fn new(pair: ExponentPair) -> Self {
        Search { pair, best: None, trace: Vec::new(), evaluations: 0 }
    }

    fn offer(&mut self, witness: Witness, values: Vec<C>, ratio: f64) {
        self.trace.push(WitnessRatio { witness: witness.clone(), ratio });
        if self.best.as_ref().is_none_or(|b| ratio > b.0) {
            self.best = Some((ratio, witness, values));
        }
    }

    fn finish(self) -> NormEstimate {
        let (lower_bound, witness, values) = self.best.expect("at least one witness was offered");
        NormEstimate { pair: self.pair, lower_bound, witness, values, evaluations: self.evaluations, trace: self.trace }
    }
}

/// Lower bound for the extension constant `R*(p→r)`: the best of the point
/// mass, the constant, every line indicator and `budget` random starts refined
/// by coordinate ascent. Deterministic in `seed`.
pub fn estimate_rstar(
    h: &VarietySlice,
    pr: &ExponentPair,
    budget: usize,
    seed: u64,
) -> Result<NormEstimate, OpnormError> {
    if budget == 0 {
        return Err(OpnormError::EmptyBudget);
    }
    if h.is_empty() {
        return Err(OpnormError::EmptyCarrier);
    }
    let n = h.len();
    let mut search = Search::new(*pr);
    let unit = |k: usize| {
        let mut f = vec![C::new(0.0, 0.0); n];
        f[k] = C::new(1.0, 0.0);
        f
    };
    let origin = h.position(0);
    let first = (0..n).find(|&k| Some(k) != origin).unwrap_or(0);
    let f = unit(first);
    search.offer(Witness::DeltaPoint { point: h.point(first).to_vec() }, f.clone(), extension_ratio(h, &f, pr)?);
    if let Some(k) = origin {
        let f = unit(k);
        search.offer(Witness::Spike, f.clone(), extension_ratio(h, &f, pr)?);
    }
    let ones = vec![C::new(1.0, 0.0); n];
    search.offer(Witness::Constant, ones.clone(), extension_ratio(h, &ones, pr)?);
    for (direction, f) in line_indicators(h) {
        let r = extension_ratio(h, &f, pr)?;
        search.offer(Witness::LineIndicator { direction }, f, r);
    }
    let (p, r) = (pr.p(), pr.r());
    for trial in 0..budget as u64 {
        let mut rng = stream_rng(seed, trial);
        let start = random_complex(n, &mut rng);
        let out = if r == 4.0 {
            coordinate_ascent(&mut ExtensionL4::new(h, &start), p, 1.0 / n as f64, start)
        } else {
            coordinate_ascent(&mut ExtensionGeneric::new(h, r, &start), p, 1.0 / n as f64, start)
        };
        search.evaluations += out.evaluations;
        let ratio = extension_ratio(h, &out.values, pr)?;
        debug_assert!((out.ratio - ratio).abs() <= 1e-6 * ratio.max(1.0));
        search.offer(Witness::Ascent { seed, trial, passes: out.passes }, out.values, ratio);
    }
    Ok(search.finish())
}

/// Result of a power iteration for an `L² → L²` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub norm: f64,
    pub iterations: usize,
    /// Rayleigh quotient of each iterate.
    pub history: Vec<f64>,
}

const POWER_TOLERANCE: f64 = 1e-8;
const POWER_MAX_ITERATIONS: usize = 10_000;

fn power_iteration(
    mut v: Vec<C>,
    weight: f64,
    mut apply: impl FnMut(&[C]) -> Result<Vec<C>, OpnormError>,
) -> Result<PowerIteration, OpnormError> {
    let inner = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<C>().re * weight;
    let mut history = Vec::new();
    for iterations in 1..=POWER_MAX_ITERATIONS {
        let norm = inner(&v, &v).sqrt();
        if norm == 0.0 {
            return Err(OpnormError::ZeroDenominator);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w = apply(&v)?;
        let lambda = inner(&w, &v);
        history.push(lambda);
        if let [.., prev, last] = history[..] {
            if (last - prev).abs() <= POWER_TOLERANCE * last.abs() {
                return Ok(PowerIteration { norm: last.max(0.0).sqrt(), iterations, history });
            }
        }
        v = w;
    }
    Err(OpnormError::NonConvergence { history })
}

fn power_start(n: usize) -> Vec<C> {
    random_complex(n, &mut stream_rng(0x5eed, n as u64))
}

/// The `L²(dσ) → L²(dm)` norm of the extension operator: the square root of the
/// top eigenvalue of its composition with the adjoint.
pub fn exact_norm_22(h: &VarietySlice) -> Result<PowerIteration, OpnormError> {
    if h.is_empty() {
        return Err(OpnormError::EmptyCarrier);
    }
    power_iteration(power_start(h.len()), 1.0 / h.len() as f64, |f| {
        let hat = frequency_hat(&extension_transform(h, f)?)?;
        Ok(h.indices().iter().map(|&i| hat.get(i)).collect())
    })
}

/// The `L²(dm) → L²(dσ)` norm of the restriction operator `g ↦ ĝ|_H`.
pub fn restriction_norm_22(h: &VarietySlice) -> Result<PowerIteration, OpnormError> {
    if h.is_empty() {
        return Err(OpnormError::EmptyCarrier);
    }
    let grid = *h.grid();
    power_iteration(power_start(grid.size()), 1.0, |g| {
        let hat = frequency_hat(&SpectralTable::new(grid, Measure::Frequency, g.to_vec())?)?;
        let on: Vec<C> = h.indices().iter().map(|&i| hat.get(i)).collect();
        Ok(extension_transform(h, &on)?.into_values())
    })
}

/// The kernel `K = (dσ)^∨ − δ₀` and its transform `K̂ = q^d|H|⁻¹H − 1`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub k: SpectralTable,
    pub k_hat: SpectralTable,
    /// `q · max |K|`.
    pub c1: f64,
    /// `q⁻¹ · max |K̂|`.
    pub c2: f64,
    /// `|H|` lies outside `[q^{d−1}/4, 4q^{d−1}]`.
    pub size_flag: bool,
    /// Some hyperplane through the origin lies in `H`.
    pub plane_flag: bool,
}

pub fn kernel_pair(h: &VarietySlice) -> Result<KernelPair, OpnormError> {
    let sigma = SurfaceMeasure::new(h.clone())?;
    let mut k = sigma.inverse_transform();
    k.values_mut()[0] = C::new(0.0, 0.0);
    let k_hat = frequency_hat(&k)?;
    let q = h.field().q();
    let expected = q.powi(h.dim() as i32 - 1);
    let n = h.len() as f64;
    let plane_flag = h.is_homogeneous() && projective_intersection_counts(h).iter().any(|&(_, c)| c as f64 == expected);
    Ok(KernelPair {
        c1: q * k.max_abs(),
        c2: k_hat.max_abs() / q,
        size_flag: n < expected / 4.0 || n > 4.0 * expected,
        plane_flag,
        k,
        k_hat,
    })
}

/// `(f ∗ dσ)(x) = |H|⁻¹ Σ_{y∈H} f(x − y)` through the transforms.
pub fn averaging_convolve(f: &SpectralTable, h: &VarietySlice) -> Result<SpectralTable, OpnormError> {
    f.expect_measure(Measure::Space)?;
    if f.grid() != h.grid() {
        return Err(SpectrumError::GridMismatch.into());
    }
    let sigma_hat = fourier_forward(&SurfaceMeasure::new(h.clone())?.density())?;
    let product = fourier_forward(f)?.mul(&sigma_hat)?;
    Ok(fourier_inverse(&product)?)
}

/// `‖f ∗ dσ‖_{L^r(dx)} / ‖f‖_{L^p(dx)}` for `f` on the whole grid.
pub fn averaging_ratio(h: &VarietySlice, f: &SpectralTable, pr: &ExponentPair) -> Result<f64, OpnormError> {
    let den = f.norm(pr.p());
    if den == 0.0 {
        return Err(OpnormError::ZeroDenominator);
    }
    ratio_or_zero_denominator(averaging_convolve(f, h)?.norm(pr.r()), den)
}

/// Lower bound for the averaging constant `A(p→r)`: the best of the spike at
/// the origin, the carrier indicator, the constant and `budget` random starts
/// refined by coordinate ascent. Deterministic in `seed`.
pub fn estimate_a(h: &VarietySlice, pr: &ExponentPair, budget: usize, seed: u64) -> Result<NormEstimate, OpnormError> {
    if budget == 0 {
        return Err(OpnormError::EmptyBudget);
    }
    if h.is_empty() {
        return Err(OpnormError::EmptyCarrier);
    }
    let grid = *h.grid();
    let mut search = Search::new(*pr);
    let offer = |search: &mut Search, witness: Witness, table: SpectralTable| -> Result<(), OpnormError> {
        let r = averaging_ratio(h, &table, pr)?;
        search.offer(witness, table.into_values(), r);
        Ok(())
    };
    offer(&mut search, Witness::Spike, SpectralTable::delta(grid, Measure::Space))?;
    offer(&mut search, Witness::CarrierIndicator, SpectralTable::indicator(h))?;
    offer(&mut search, Witness::Constant, SpectralTable::from_real(grid, Measure::Space, &vec![1.0; grid.size()])?)?;
    for trial in 0..budget as u64 {
        let mut rng = stream_rng(seed, trial);
        let start = random_complex(grid.size(), &mut rng);
        let mut num = AveragingState::new(h, pr.r(), &start);
        let out = coordinate_ascent(&mut num, pr.p(), 1.0 / grid.size() as f64, start);
        search.evaluations += out.evaluations;
        let table = SpectralTable::new(grid, Measure::Space, out.values)?;
        let r = averaging_ratio(h, &table, pr)?;
        debug_assert!((out.ratio - r).abs() <= 1e-6 * r.max(1.0));
        search.offer(Witness::Ascent { seed, trial, passes: out.passes }, table.into_values(), r);
    }
    Ok(search.finish())
}

/// Ordinary least squares `y ≈ slope·x + intercept` with the standard error of
/// the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two paired samples");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let std_error = if xs.len() > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LinearFit { slope, intercept, std_error }
}

/// Structured witness evaluated at each prime of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanWitness {
    /// `δ₀` through the averaging operator.
    AveragingSpike,
    /// `f ≡ 1` through the extension operator.
    ExtensionConstant,
    /// A point mass at a nonzero carrier point through the extension operator.
    ExtensionPoint,
    /// The best line indicator through the extension operator.
    ExtensionLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub p: u32,
    pub size: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub fit: LinearFit,
    /// Predicted slope assuming `|H| ∼ q^{d−1}`, where a closed form exists.
    pub theory: Option<f64>,
    /// Fitted exponent of `|H|` against `q`.
    pub size_exponent: f64,
    pub samples: Vec<ScanSample>,
}

/// Fits `log(ratio)` against `log q` for a structured witness on the zero set
/// of `poly_text` over each prime.
pub fn necessity_exponent_scan(
    poly_text: &str,
    dim: usize,
    pr: &ExponentPair,
    primes: &[u32],
    witness: ScanWitness,
) -> Result<ExponentFit, OpnormError> {
    if primes.len() < 4 {
        return Err(OpnormError::TooFewPrimes(primes.len()));
    }
    let mut samples = Vec::with_capacity(primes.len());
    for &p in primes {
        let field = PrimeField::new(p)?;
        let poly = parse_poly(poly_text, dim, field)?;
        let h = enumerate_level_set(&poly, field.zero(), field)?;
        if h.is_empty() {
            return Err(OpnormError::EmptyCarrier);
        }
        let n = h.len();
        let ratio = match witness {
            ScanWitness::AveragingSpike => averaging_ratio(&h, &SpectralTable::delta(*h.grid(), Measure::Space), pr)?,
            ScanWitness::ExtensionConstant => extension_ratio(&h, &vec![C::new(1.0, 0.0); n], pr)?,
            ScanWitness::ExtensionPoint => {
                let k = (0..n).find(|&k| h.indices()[k] != 0).unwrap_or(0);
                let mut f = vec![C::new(0.0, 0.0); n];
                f[k] = C::new(1.0, 0.0);
                extension_ratio(&h, &f, pr)?
            }
            ScanWitness::ExtensionLine => {
                let mut best = 0.0f64;
                for (_, f) in line_indicators(&h) {
                    best = best.max(extension_ratio(&h, &f, pr)?);
                }
                best
            }
        };
        samples.push(ScanSample { p, size: n, ratio });
    }
    let xs: Vec<f64> = samples.iter().map(|s| (s.p as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.ratio.ln()).collect();
    let sizes: Vec<f64> = samples.iter().map(|s| (s.size as f64).ln()).collect();
    let d = dim as f64;
    let (x, y) = (ratio_f64(pr.inv_p()), ratio_f64(pr.inv_r()));
    let theory = match witness {
        ScanWitness::AveragingSpike => Some(d * x - d * y + (d - 1.0) * (y - 1.0)),
        ScanWitness::ExtensionPoint => Some(d * y + (d - 1.0) * (x - 1.0)),
        _ => None,
    };
    Ok(ExponentFit { fit: linear_fit(&xs, &ys), theory, size_exponent: linear_fit(&xs, &sizes).slope, samples })
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
