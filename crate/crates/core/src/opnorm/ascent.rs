//! Coordinate ascent on `‖T f‖ / ‖f‖` over a fixed additive stencil.
//!
//! Each pass visits every coordinate once and tries `f(k) + μ·s·e^{iπj/4}` for
//! `j = 0..8`, `μ ∈ {1, 1/4}`, where `s` is the root-mean-square of `f` at the
//! start of the pass. The best improving move is applied. The search stops
//! after a pass with no improvement or after [`MAX_PASSES`] passes.

use std::f64::consts::PI;

use crate::ffield::ComplexValue;
use crate::grid::Grid;
use crate::spectrum::{fourier_forward, fourier_inverse, lr_norm, Measure, SpectralTable, SurfaceMeasure};
use crate::variety::VarietySlice;

pub const MAX_PASSES: usize = 500;
pub const STENCIL_PHASES: usize = 8;
pub const STENCIL_MAGNITUDES: [f64; 2] = [1.0, 0.25];

/// Relative gain a move must achieve to be accepted.
const MIN_GAIN: f64 = 1e-12;

type C = ComplexValue;

/// The numerator `‖T f‖` with cheap single-coordinate trial moves.
pub(crate) trait Numerator {
    fn norm(&self) -> f64;
    /// Writes `‖T(f + δ e_k)‖` for every `δ` in `deltas` into `out`.
    fn trial_norms(&mut self, f: &[C], k: usize, deltas: &[C], out: &mut [f64]);
    /// Commits `f(k) += δ`; `f` still holds the old values.
    fn apply(&mut self, f: &[C], k: usize, delta: C);
    /// Recomputes the state from scratch to shed accumulated rounding.
    fn resync(&mut self, f: &[C]);
}

/// `(weight · Σ|f|^p)^{1/p}`, or `max |f|` when `p = ∞`.
pub(crate) struct LpDenominator {
    p: f64,
    weight: f64,
    sum: f64,
    max: f64,
}

impl LpDenominator {
    pub fn new(p: f64, weight: f64, f: &[C]) -> Self {
        let mut d = LpDenominator { p, weight, sum: 0.0, max: 0.0 };
        d.resync(f);
        d
    }

    pub fn resync(&mut self, f: &[C]) {
        if self.p.is_infinite() {
            self.max = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        } else {
            self.sum = f.iter().map(|v| v.norm().powf(self.p)).sum();
        }
    }

    fn norm_of_sum(&self, sum: f64) -> f64 {
        (self.weight * sum.max(0.0)).powf(1.0 / self.p)
    }

    pub fn norm(&self) -> f64 {
        if self.p.is_infinite() {
            self.max
        } else {
            self.norm_of_sum(self.sum)
        }
    }

    pub fn trial(&self, f: &[C], k: usize, new: C) -> f64 {
        let (old, new) = (f[k].norm(), new.norm());
        if self.p.is_infinite() {
            if new >= self.max {
                new
            } else if old < self.max {
                self.max
            } else {
                f.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v.norm()).fold(new, f64::max)
            }
        } else {
            self.norm_of_sum(self.sum - old.powf(self.p) + new.powf(self.p))
        }
    }

    pub fn apply(&mut self, f: &[C], k: usize, new: C) {
        if self.p.is_infinite() {
            self.max = self.trial(f, k, new);
        } else {
            self.sum += new.norm().powf(self.p) - f[k].norm().powf(self.p);
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AscentOutcome {
    pub values: Vec<C>,
    pub ratio: f64,
    pub passes: usize,
    pub evaluations: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub(crate) fn stencil(scale: f64) -> Vec<C> {
    let mut out = Vec::with_capacity(STENCIL_PHASES * STENCIL_MAGNITUDES.len());
    for mu in STENCIL_MAGNITUDES {
        for j in 0..STENCIL_PHASES {
            out.push(C::from_polar(mu * scale, PI * j as f64 / 4.0));
        }
    }
    out
}

pub(crate) fn coordinate_ascent<N: Numerator>(num: &mut N, p: f64, weight: f64, mut f: Vec<C>) -> AscentOutcome {
    let mut den = LpDenominator::new(p, weight, &f);
    let mut current = ratio(num.norm(), den.norm());
    let mut trial = vec![0.0; STENCIL_PHASES * STENCIL_MAGNITUDES.len()];
    let mut evaluations = 0;
    let mut passes = 0;
    while passes < MAX_PASSES {
        passes += 1;
        let rms = (f.iter().map(|v| v.norm_sqr()).sum::<f64>() / f.len() as f64).sqrt();
        let deltas = stencil(if rms > 0.0 { rms } else { 1.0 });
        let mut improved = false;
        for k in 0..f.len() {
            num.trial_norms(&f, k, &deltas, &mut trial);
            evaluations += deltas.len();
            let mut best: Option<(usize, f64)> = None;
            for (j, &n) in trial.iter().enumerate() {
                let r = ratio(n, den.trial(&f, k, f[k] + deltas[j]));
                if r > current * (1.0 + MIN_GAIN) && best.is_none_or(|(_, b)| r > b) {
                    best = Some((j, r));
                }
            }
            if let Some((j, r)) = best {
                let delta = deltas[j];
                num.apply(&f, k, delta);
                den.apply(&f, k, f[k] + delta);
                f[k] += delta;
                current = r;
                improved = true;
            }
        }
        num.resync(&f);
        den.resync(&f);
        current = ratio(num.norm(), den.norm());
        if !improved {
            break;
        }
    }
    AscentOutcome { values: f, ratio: current, passes, evaluations }
}

/// `‖(f dσ)^∨‖_{L^4(dm)}` through the self-convolution `S = f ∗ f` on the
/// grid: `Σ_m |Σ_{x∈H} f(x)χ(m·x)|⁴ = q^d Σ_ξ |S(ξ)|²`. A move at `a ∈ H`
/// only changes `S` on `a + H`.
pub(crate) struct ExtensionL4 {
    n: usize,
    /// `sum_index[k·n + j]` is the grid index of `h_k + h_j`.
    sum_index: Vec<u32>,
    s: Vec<C>,
    total: f64,
    scale: f64,
}

impl ExtensionL4 {
    pub fn new(h: &VarietySlice, f: &[C]) -> Self {
        let grid = h.grid();
        let n = h.len();
        let mut sum_index = Vec::with_capacity(n * n);
        for &a in h.indices() {
            for &b in h.indices() {
                sum_index.push(grid.add(a, b) as u32);
            }
        }
        let scale = grid.size() as f64 / (n as f64).powi(4);
        let mut state = ExtensionL4 { n, sum_index, s: vec![C::new(0.0, 0.0); grid.size()], total: 0.0, scale };
        state.resync(f);
        state
    }

    fn norm_from(&self, total: f64) -> f64 {
        (self.scale * total.max(0.0)).powf(0.25)
    }
}

impl Numerator for ExtensionL4 {
    fn norm(&self) -> f64 {
        self.norm_from(self.total)
    }

    fn trial_norms(&mut self, f: &[C], k: usize, deltas: &[C], out: &mut [f64]) {
        let row = &self.sum_index[k * self.n..(k + 1) * self.n];
        let mut b = C::new(0.0, 0.0);
        let mut c = 0.0;
        for (j, &xi) in row.iter().enumerate() {
            if j != k {
                b += self.s[xi as usize].conj() * f[j];
                c += f[j].norm_sqr();
            }
        }
        let s2 = self.s[row[k] as usize];
        for (o, &d) in out.iter_mut().zip(deltas) {
            let diag = (s2 + 2.0 * d * f[k] + d * d).norm_sqr() - s2.norm_sqr();
            *o = self.norm_from(self.total + 4.0 * (d * b).re + 4.0 * d.norm_sqr() * c + diag);
        }
    }

    fn apply(&mut self, f: &[C], k: usize, delta: C) {
        let row = &self.sum_index[k * self.n..(k + 1) * self.n];
        for (j, &xi) in row.iter().enumerate() {
            let old = self.s[xi as usize];
            let new = if j == k { old + 2.0 * delta * f[k] + delta * delta } else { old + 2.0 * delta * f[j] };
            self.total += new.norm_sqr() - old.norm_sqr();
            self.s[xi as usize] = new;
        }
    }

    fn resync(&mut self, f: &[C]) {
        self.s.iter_mut().for_each(|v| *v = C::new(0.0, 0.0));
        for k in 0..self.n {
            let row = &self.sum_index[k * self.n..(k + 1) * self.n];
            for (j, &xi) in row.iter().enumerate() {
                self.s[xi as usize] += f[k] * f[j];
            }
        }
        self.total = self.s.iter().map(|v| v.norm_sqr()).sum();
    }
}

/// `‖(f dσ)^∨‖_{L^r(dm)}` for any `r`, keeping the full transform. Each trial
/// costs `O(q^d)`.
pub(crate) struct ExtensionGeneric {
    grid: Grid,
    points: Vec<Vec<u32>>,
    r: f64,
    inv_size: f64,
    v: Vec<C>,
    roots: Vec<C>,
    phase: Vec<u32>,
}

impl ExtensionGeneric {
    pub fn new(h: &VarietySlice, r: f64, f: &[C]) -> Self {
        let grid = *h.grid();
        let roots = crate::ffield::RootTable::new(&grid.field()).as_slice().to_vec();
        let points = h.iter_points().map(|x| x.to_vec()).collect();
        let mut state = ExtensionGeneric {
            grid,
            points,
            r,
            inv_size: 1.0 / h.len() as f64,
            v: Vec::new(),
            roots,
            phase: Vec::new(),
        };
        state.resync(f);
        state
    }
}

impl Numerator for ExtensionGeneric {
    fn norm(&self) -> f64 {
        lr_norm(self.v.iter().map(|v| v.norm()), self.r, 1.0)
    }

    fn trial_norms(&mut self, _f: &[C], k: usize, deltas: &[C], out: &mut [f64]) {
        self.phase = self.grid.dot_table(&self.points[k]);
        for (o, &d) in out.iter_mut().zip(deltas) {
            let e = d * self.inv_size;
            let roots = &self.roots;
            *o = lr_norm(self.v.iter().zip(&self.phase).map(|(v, &t)| (v + e * roots[t as usize]).norm()), self.r, 1.0);
        }
    }

    fn apply(&mut self, _f: &[C], k: usize, delta: C) {
        self.phase = self.grid.dot_table(&self.points[k]);
        let e = delta * self.inv_size;
        for (v, &t) in self.v.iter_mut().zip(&self.phase) {
            *v += e * self.roots[t as usize];
        }
    }

    fn resync(&mut self, f: &[C]) {
        self.v = vec![C::new(0.0, 0.0); self.grid.size()];
        for (x, &fx) in self.points.iter().zip(f) {
            let phase = self.grid.dot_table(x);
            for (v, &t) in self.v.iter_mut().zip(&phase) {
                *v += fx * self.roots[t as usize] * self.inv_size;
            }
        }
    }
}

/// `‖f ∗ dσ‖_{L^r(dx)}` where `f` lives on the whole grid. A move at `a`
/// shifts `f ∗ dσ` by `δ/|H|` on `a + H`. Exponents 2 and 4 use moment sums
/// over that set; other exponents sum directly.
pub(crate) struct AveragingState {
    grid: Grid,
    /// Carrier coordinates, `dim` per point.
    h_coords: Vec<u32>,
    r: f64,
    inv_h: f64,
    conv: Vec<C>,
    total: f64,
    affected: Vec<usize>,
    /// Coordinate whose translate `affected` currently holds.
    affected_for: Option<usize>,
    scratch: Vec<u32>,
    /// Transform of the surface measure, for exact resynchronization.
    sigma_hat: SpectralTable,
}

impl AveragingState {
    pub fn new(h: &VarietySlice, r: f64, f: &[C]) -> Self {
        let grid = *h.grid();
        let mut state = AveragingState {
            grid,
            h_coords: h.iter_points().flatten().copied().collect(),
            r,
            inv_h: 1.0 / h.len() as f64,
            conv: Vec::new(),
            total: 0.0,
            affected: Vec::with_capacity(h.len()),
            affected_for: None,
            scratch: vec![0; grid.dim()],
            sigma_hat: fourier_forward(&SurfaceMeasure::new(h.clone()).expect("carrier is nonempty").density())
                .expect("density lives on the space side"),
        };
        state.resync(f);
        state
    }

    fn fill_affected(&mut self, a: usize) {
        if self.affected_for == Some(a) {
            return;
        }
        self.affected_for = Some(a);
        let p = self.grid.p();
        let d = self.grid.dim();
        self.grid.decode_into(a, &mut self.scratch);
        self.affected.clear();
        for y in self.h_coords.chunks_exact(d) {
            let mut idx = 0usize;
            for i in (0..d).rev() {
                let s = self.scratch[i] + y[i];
                idx = idx * p as usize + (if s >= p { s - p } else { s }) as usize;
            }
            self.affected.push(idx);
        }
    }

    fn power(&self, v: C) -> f64 {
        match self.r {
            2.0 => v.norm_sqr(),
            4.0 => v.norm_sqr() * v.norm_sqr(),
            r => v.norm().powf(r),
        }
    }

    fn power_sum(&self) -> f64 {
        self.conv.iter().map(|&v| self.power(v)).sum()
    }

    fn norm_from(&self, total: f64) -> f64 {
        (total.max(0.0) / self.grid.size() as f64).powf(1.0 / self.r)
    }
}

impl Numerator for AveragingState {
    fn norm(&self) -> f64 {
        if self.r.is_infinite() {
            self.conv.iter().map(|v| v.norm()).fold(0.0, f64::max)
        } else {
            self.norm_from(self.total)
        }
    }

    fn trial_norms(&mut self, _f: &[C], k: usize, deltas: &[C], out: &mut [f64]) {
        self.fill_affected(k);
        let n = self.affected.len() as f64;
        if self.r == 2.0 || self.r == 4.0 {
            let (mut su, mut suc, mut sc, mut sc2) = (0.0, C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
            for &i in &self.affected {
                let c = self.conv[i].conj();
                let u = c.norm_sqr();
                su += u;
                suc += c * u;
                sc += c;
                sc2 += c * c;
            }
            for (o, &d) in out.iter_mut().zip(deltas) {
                let e = d * self.inv_h;
                let ee = e.norm_sqr();
                let change = if self.r == 2.0 {
                    2.0 * (e * sc).re + n * ee
                } else {
                    4.0 * ee * su + 2.0 * (e * e * sc2).re + n * ee * ee + 4.0 * (e * suc).re + 4.0 * ee * (e * sc).re
                };
                *o = self.norm_from(self.total + change);
            }
        } else if self.r.is_infinite() {
            for (o, &d) in out.iter_mut().zip(deltas) {
                let e = d * self.inv_h;
                let mut shifted: Vec<(usize, C)> = self.affected.iter().map(|&i| (i, self.conv[i] + e)).collect();
                shifted.sort_unstable_by_key(|t| t.0);
                let mut max = shifted.iter().map(|t| t.1.norm()).fold(0.0, f64::max);
                for (i, v) in self.conv.iter().enumerate() {
                    if shifted.binary_search_by_key(&i, |t| t.0).is_err() {
                        max = max.max(v.norm());
                    }
                }
                *o = max;
            }
        } else {
            let old: f64 = self.affected.iter().map(|&i| self.conv[i].norm().powf(self.r)).sum();
            for (o, &d) in out.iter_mut().zip(deltas) {
                let e = d * self.inv_h;
                let new: f64 = self.affected.iter().map(|&i| (self.conv[i] + e).norm().powf(self.r)).sum();
                *o = self.norm_from(self.total - old + new);
            }
        }
    }

    fn apply(&mut self, _f: &[C], k: usize, delta: C) {
        self.fill_affected(k);
        let e = delta * self.inv_h;
        for idx in 0..self.affected.len() {
            let i = self.affected[idx];
            let old = self.conv[i];
            let new = old + e;
            if self.r.is_finite() {
                self.total += self.power(new) - self.power(old);
            }
            self.conv[i] = new;
        }
    }

    fn resync(&mut self, f: &[C]) {
        let table = SpectralTable::new(self.grid, Measure::Space, f.to_vec()).expect("one value per grid point");
        let product = fourier_forward(&table).and_then(|t| t.mul(&self.sigma_hat)).expect("tables share grid and side");
        self.conv = fourier_inverse(&product).expect("product lives on the frequency side").into_values();
        if self.r.is_finite() {
            self.total = self.power_sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::PrimeField;
    use crate::mpoly::parse_poly;
    use crate::spectrum::extension_transform;
    use crate::variety::enumerate_level_set;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cone(p: u32) -> VarietySlice {
        let field = PrimeField::new(p).unwrap();
        let poly = parse_poly("x1^2 - x2*x3", 3, field).unwrap();
        enumerate_level_set(&poly, field.zero(), field).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
        (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn direct_extension_norm(h: &VarietySlice, f: &[C], r: f64) -> f64 {
        extension_transform(h, f).unwrap().norm(r)
    }

    fn direct_averaging_norm(h: &VarietySlice, f: &[C], r: f64) -> f64 {
        let g = *h.grid();
        let mut conv = vec![C::new(0.0, 0.0); g.size()];
        for x in 0..g.size() {
            for &y in h.indices() {
                conv[x] += f[g.sub(x, y)] / h.len() as f64;
            }
        }
        SpectralTable::new(g, Measure::Space, conv).unwrap().norm(r)
    }

    #[test]
    fn extension_trials_match_direct_norms() {
        let h = cone(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_vec(h.len(), &mut rng);
        let deltas = stencil(0.7);
        let mut l4 = ExtensionL4::new(&h, &f);
        let mut generic = ExtensionGeneric::new(&h, 4.0, &f);
        let mut generic3 = ExtensionGeneric::new(&h, 3.0, &f);
        assert!((l4.norm() - direct_extension_norm(&h, &f, 4.0)).abs() < 1e-12);
        let mut out = vec![0.0; deltas.len()];
        let mut out_g = out.clone();
        for k in [0, 3, 17] {
            l4.trial_norms(&f, k, &deltas, &mut out);
            generic.trial_norms(&f, k, &deltas, &mut out_g);
            for (j, &d) in deltas.iter().enumerate() {
                let mut g = f.clone();
                g[k] += d;
                let direct = direct_extension_norm(&h, &g, 4.0);
                assert!((out[j] - direct).abs() < 1e-12, "k={k} j={j}");
                assert!((out_g[j] - direct).abs() < 1e-12);
            }
            generic3.trial_norms(&f, k, &deltas, &mut out_g);
            let mut g = f.clone();
            g[k] += deltas[5];
            assert!((out_g[5] - direct_extension_norm(&h, &g, 3.0)).abs() < 1e-12);
        }
        let mut g = f.clone();
        l4.apply(&g, 4, deltas[2]);
        generic.apply(&g, 4, deltas[2]);
        g[4] += deltas[2];
        let direct = direct_extension_norm(&h, &g, 4.0);
        assert!((l4.norm() - direct).abs() < 1e-12);
        assert!((generic.norm() - direct).abs() < 1e-12);
    }

    #[test]
    fn averaging_trials_match_direct_norms() {
        let h = cone(5);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = random_vec(h.grid().size(), &mut rng);
        let deltas = stencil(0.3);
        for r in [2.0, 4.0, 3.0, f64::INFINITY] {
            let mut state = AveragingState::new(&h, r, &f);
            assert!((state.norm() - direct_averaging_norm(&h, &f, r)).abs() < 1e-12);
            let mut out = vec![0.0; deltas.len()];
            for k in [0, 11, 98] {
                state.trial_norms(&f, k, &deltas, &mut out);
                for (j, &d) in deltas.iter().enumerate() {
                    let mut g = f.clone();
                    g[k] += d;
                    assert!((out[j] - direct_averaging_norm(&h, &g, r)).abs() < 1e-12, "r={r} k={k} j={j}");
                }
            }
            let mut g = f.clone();
            state.apply(&g, 7, deltas[9]);
            g[7] += deltas[9];
            assert!((state.norm() - direct_averaging_norm(&h, &g, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn denominator_trials() {
        let f = vec![C::new(3.0, 0.0), C::new(0.0, 1.0), C::new(-2.0, 0.0)];
        let inf = LpDenominator::new(f64::INFINITY, 1.0, &f);
        assert_eq!(inf.norm(), 3.0);
        assert_eq!(inf.trial(&f, 0, C::new(0.5, 0.0)), 2.0);
        assert_eq!(inf.trial(&f, 1, C::new(0.0, 4.0)), 4.0);
        let two = LpDenominator::new(2.0, 1.0 / 3.0, &f);
        assert!((two.norm() - (14.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((two.trial(&f, 2, C::new(0.0, 0.0)) - (10.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ascent_never_decreases_the_ratio() {
        let h = cone(5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_vec(h.len(), &mut rng);
        let mut num = ExtensionL4::new(&h, &f);
        let start = num.norm() / LpDenominator::new(2.0, 1.0 / h.len() as f64, &f).norm();
        let out = coordinate_ascent(&mut num, 2.0, 1.0 / h.len() as f64, f);
        assert!(out.ratio >= start);
        assert!(out.passes <= MAX_PASSES);
        let direct = direct_extension_norm(&h, &out.values, 4.0)
            / LpDenominator::new(2.0, 1.0 / h.len() as f64, &out.values).norm();
        assert!((out.ratio - direct).abs() < 1e-9);
    }
}
