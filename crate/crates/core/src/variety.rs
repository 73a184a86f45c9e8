//! Level sets `H_t = {x : P(x) = t}` and their incidence geometry: hyperplane
//! sections, plane containment, line decompositions and translate incidences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::{FieldElement, PrimeField};
use crate::grid::{Grid, GridError};
use crate::mpoly::{Homogeneity, LinearSubstitution, Poly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VarietyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("dimension {0} is outside the supported range 2..=5")]
    Dimension(usize),
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("normal vector must be nonzero")]
    ZeroNormal,
    #[error("point set is not a union of lines through the origin: {0}")]
    NotConic(String),
    #[error("point has {got} coordinates, expected {expected}")]
    Arity { expected: usize, got: usize },
}

/// A level set stored both as a sorted list of grid indices and as a bitset.
#[derive(Debug, Clone)]
pub struct VarietySlice {
    grid: Grid,
    level: FieldElement,
    points: Vec<usize>,
    coords: Vec<u32>,
    membership: Vec<u64>,
    homogeneous: bool,
}

impl VarietySlice {
    /// Builds a slice from arbitrary grid indices (deduplicated and sorted).
    /// `homogeneous` records whether the set is known to be the zero set of a
    /// homogeneous polynomial.
    pub fn from_indices(grid: Grid, level: FieldElement, mut points: Vec<usize>, homogeneous: bool) -> Self {
        points.sort_unstable();
        points.dedup();
        assert!(points.last().is_none_or(|&i| i < grid.size()), "index outside the grid");
        let mut membership = vec![0u64; grid.size().div_ceil(64)];
        let mut coords = Vec::with_capacity(points.len() * grid.dim());
        let mut buf = vec![0u32; grid.dim()];
        for &i in &points {
            membership[i / 64] |= 1u64 << (i % 64);
            grid.decode_into(i, &mut buf);
            coords.extend_from_slice(&buf);
        }
        VarietySlice { grid, level, points, coords, membership, homogeneous }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn field(&self) -> PrimeField {
        self.grid.field()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn level(&self) -> FieldElement {
        self.level
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether this is the zero set of a homogeneous polynomial.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Sorted grid indices of the points.
    pub fn indices(&self) -> &[usize] {
        &self.points
    }

    /// Coordinates of the `k`-th point.
    pub fn point(&self, k: usize) -> &[u32] {
        let d = self.dim();
        &self.coords[k * d..(k + 1) * d]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[u32]> {
        self.coords.chunks_exact(self.dim())
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.membership[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        x.len() == self.dim() && self.contains_index(self.grid.index(x))
    }

    /// Position of a grid index in the sorted point list.
    pub fn position(&self, idx: usize) -> Option<usize> {
        self.points.binary_search(&idx).ok()
    }

    /// 0/1 indicator over the whole grid.
    pub fn indicator(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.size()];
        for &i in &self.points {
            out[i] = 1.0;
        }
        out
    }
}

/// Normal vector `m ≠ 0` of the hyperplane `Π_m = {x : m·x = 0}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperplaneSpec {
    normal: Vec<u32>,
}

impl HyperplaneSpec {
    pub fn new(field: &PrimeField, normal: &[u32]) -> Result<Self, VarietyError> {
        let p = field.modulus();
        let normal: Vec<u32> = normal.iter().map(|&c| c % p).collect();
        if normal.iter().all(|&c| c == 0) {
            return Err(VarietyError::ZeroNormal);
        }
        Ok(HyperplaneSpec { normal })
    }

    pub fn normal(&self) -> &[u32] {
        &self.normal
    }
}

/// The lines through the origin whose union is a homogeneous variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDecomposition {
    /// One canonical direction per line (first nonzero coordinate 1).
    pub lines: Vec<Vec<u32>>,
    pub contains_origin_only: bool,
}

impl LineDecomposition {
    pub fn count(&self) -> usize {
        self.lines.len()
    }

    /// The largest number of lines lying in a common plane through the origin,
    /// with a normal attaining it. Only meaningful in dimension 3.
    pub fn max_lines_in_plane(&self, grid: &Grid) -> (usize, Vec<u32>) {
        let p = grid.p() as u64;
        let mut best = (0usize, vec![0u32; grid.dim()]);
        for m in grid.projective_points() {
            let n = self
                .lines
                .iter()
                .filter(|l| l.iter().zip(&m).map(|(&a, &b)| a as u64 * b as u64).sum::<u64>() % p == 0)
                .count();
            if n > best.0 {
                best = (n, m);
            }
        }
        best
    }
}

/// Exhaustive enumeration of `H_t = {x ∈ F_p^d : P(x) = t}`.
pub fn enumerate_level_set(poly: &Poly, t: FieldElement, field: PrimeField) -> Result<VarietySlice, VarietyError> {
    let d = poly.nvars();
    if !(2..=5).contains(&d) {
        return Err(VarietyError::Dimension(d));
    }
    assert_eq!(poly.field(), field, "polynomial and field disagree");
    let grid = Grid::new(field, d)?;
    let values = poly.value_table(&grid);
    let points: Vec<usize> = values.iter().enumerate().filter(|(_, &v)| v == t).map(|(i, _)| i).collect();

    let shifted_degree = poly.minus_constant(t).degree().unwrap_or(0) as usize;
    if points.len() < grid.size() {
        // Schwartz–Zippel
        assert!(
            points.len() <= shifted_degree * grid.size() / field.modulus() as usize,
            "Schwartz–Zippel bound violated: |H_t| = {} for degree {shifted_degree}",
            points.len()
        );
    }

    let homogeneous = t.is_zero() && matches!(poly.is_homogeneous(), Homogeneity::Homogeneous(_));
    let slice = VarietySlice::from_indices(grid, t, points, homogeneous);
    if homogeneous {
        for &i in slice.indices() {
            for s in 0..field.modulus() {
                assert!(slice.contains_index(grid.scale(i, s)), "zero set of a homogeneous polynomial is not conic");
            }
        }
    }
    Ok(slice)
}

/// `|H ∩ Π_m|`.
pub fn hyperplane_intersection_count(h: &VarietySlice, m: &HyperplaneSpec) -> usize {
    let p = h.field().modulus() as u64;
    h.iter_points()
        .filter(|x| x.iter().zip(m.normal()).map(|(&a, &b)| a as u64 * b as u64).sum::<u64>() % p == 0)
        .count()
}

/// Intersection counts `|H ∩ Π_m|` for every canonical projective normal, in
/// the order of [`Grid::projective_points`].
pub fn projective_intersection_counts(h: &VarietySlice) -> Vec<(Vec<u32>, usize)> {
    let grid = h.grid();
    let p = grid.p();
    let d = grid.dim();
    grid.projective_points()
        .into_iter()
        .map(|m| {
            let count = h
                .coords
                .chunks_exact(d)
                .filter(|x| {
                    let mut acc = 0u32;
                    for (a, b) in x.iter().zip(&m) {
                        acc = (acc + a * b) % p;
                    }
                    acc == 0
                })
                .count();
            (m, count)
        })
        .collect()
}

/// Some hyperplane through the origin contained in the zero set of `P`, if any.
///
/// Scans all canonical projective normals; for each, eliminates the variable at
/// the first nonzero coordinate and tests the restricted polynomial for
/// functional vanishing.
pub fn contains_plane_through_origin(poly: &Poly, field: PrimeField) -> Result<Option<HyperplaneSpec>, VarietyError> {
    if poly.nvars() != 3 {
        return Err(VarietyError::WrongDimension { expected: 3, got: poly.nvars() });
    }
    match poly.is_homogeneous() {
        Homogeneity::Homogeneous(_) => {}
        Homogeneity::Zero => return Ok(Some(HyperplaneSpec::new(&field, &[1, 0, 0])?)),
        Homogeneity::Inhomogeneous => return Err(VarietyError::NotHomogeneous),
    }
    let grid = Grid::new(field, 3)?;
    for m in grid.projective_points() {
        let lead = m.iter().position(|&c| c != 0).expect("canonical normal is nonzero");
        // m·x = 0 with m[lead] = 1 gives x_lead = -Σ_{i≠lead} m_i x_i
        let coeffs =
            m.iter().enumerate().filter(|&(i, _)| i != lead).map(|(_, &c)| field.neg(field.elem(c as i64))).collect();
        let restricted = poly.restrict_to_hyperplane(&LinearSubstitution { var: lead, coeffs });
        if restricted.is_functionally_zero()? {
            return Ok(Some(HyperplaneSpec { normal: m }));
        }
    }
    Ok(None)
}

/// Splits a conic point set (closed under scalar multiplication, containing 0)
/// into its lines through the origin.
pub fn line_decomposition(h: &VarietySlice) -> Result<LineDecomposition, VarietyError> {
    let grid = h.grid();
    if !h.contains_index(0) {
        return Err(VarietyError::NotConic("origin is not in the set".into()));
    }
    let mut lines = std::collections::BTreeSet::new();
    for x in h.iter_points() {
        if let Some(dir) = grid.projective_canonical(x) {
            lines.insert(dir);
        }
    }
    for dir in &lines {
        let base = grid.index(dir);
        for s in 1..grid.p() {
            if !h.contains_index(grid.scale(base, s)) {
                return Err(VarietyError::NotConic(format!("line through {dir:?} is only partially contained")));
            }
        }
    }
    let lines: Vec<Vec<u32>> = lines.into_iter().collect();
    debug_assert_eq!(lines.len() * (grid.p() as usize - 1) + 1, h.len());
    Ok(LineDecomposition { contains_origin_only: lines.is_empty(), lines })
}

/// `|H ∩ (H + ξ)|`, the number of `x ∈ H` with `x − ξ ∈ H`.
pub fn translate_incidence(h: &VarietySlice, xi: &[u32]) -> Result<usize, VarietyError> {
    if xi.len() != h.dim() {
        return Err(VarietyError::Arity { expected: h.dim(), got: xi.len() });
    }
    Ok(translate_incidence_unchecked(h, xi))
}

fn translate_incidence_unchecked(h: &VarietySlice, xi: &[u32]) -> usize {
    let p = h.field().modulus();
    let d = h.dim();
    let mut strides = vec![1usize; d];
    for i in 1..d {
        strides[i] = strides[i - 1] * p as usize;
    }
    let neg: Vec<u32> = xi.iter().map(|&c| (p - c % p) % p).collect();
    h.coords
        .chunks_exact(d)
        .filter(|x| {
            let mut idx = 0usize;
            for i in 0..d {
                let v = x[i] + neg[i];
                idx += (if v >= p { v - p } else { v }) as usize * strides[i];
            }
            h.contains_index(idx)
        })
        .count()
}

/// Worst-case translate incidence normalized by `q^{d−2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    /// `sup_{ξ≠0} |H ∩ (H+ξ)| / q^{d−2}`.
    pub constant: f64,
    pub max_count: usize,
    pub argmax: Vec<u32>,
}

/// Exhaustive scan over all `ξ ≠ 0`.
pub fn incidence_hypothesis_constant(h: &VarietySlice) -> IncidenceReport {
    let grid = h.grid();
    let mut best = (0usize, vec![0u32; grid.dim()]);
    let mut xi = vec![0u32; grid.dim()];
    for idx in 1..grid.size() {
        grid.decode_into(idx, &mut xi);
        let n = translate_incidence_unchecked(h, &xi);
        if n > best.0 {
            best = (n, xi.clone());
        }
    }
    let scale = grid.field().q().powi(grid.dim() as i32 - 2);
    IncidenceReport { constant: best.0 as f64 / scale, max_count: best.0, argmax: best.1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::parse_poly;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn zero_set(text: &str, d: usize, p: u32) -> (Poly, VarietySlice) {
        let field = f(p);
        let poly = parse_poly(text, d, field).unwrap();
        let h = enumerate_level_set(&poly, field.zero(), field).unwrap();
        (poly, h)
    }

    /// Independent count: plain nested loops, no grid indexing.
    fn brute_count(poly: &Poly, p: u32, t: u32) -> usize {
        let mut n = 0;
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    if poly.evaluate(&[a, b, c]).unwrap().value() == t {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn level_set_sizes() {
        let (cone, h) = zero_set("x1^2 - x2*x3", 3, 5);
        assert_eq!(h.len(), 25);
        assert_eq!(brute_count(&cone, 5, 0), 25);
        assert_eq!(zero_set("x1 + x2 + x3", 3, 7).1.len(), 49);
        let (sphere, h) = zero_set("x1^2 + x2^2 + x3^2", 3, 7);
        assert_eq!(h.len(), 49);
        assert_eq!(brute_count(&sphere, 7, 0), 49);
    }

    #[test]
    fn nonzero_levels_match_brute_force() {
        let field = f(7);
        let sphere = parse_poly("x1^2 + x2^2 + x3^2", 3, field).unwrap();
        for t in field.elements() {
            let h = enumerate_level_set(&sphere, t, field).unwrap();
            assert_eq!(h.len(), brute_count(&sphere, 7, t.value()));
            assert!(!h.is_homogeneous() || t.is_zero());
            for x in h.iter_points() {
                assert_eq!(sphere.evaluate(x).unwrap(), t);
            }
        }
    }

    #[test]
    fn enumeration_guards() {
        let field = f(101);
        let p = parse_poly("x1", 5, field).unwrap();
        assert!(matches!(enumerate_level_set(&p, field.zero(), field), Err(VarietyError::Grid(_))));
        let q = parse_poly("x1", 6, f(3)).unwrap();
        assert!(matches!(enumerate_level_set(&q, f(3).zero(), f(3)), Err(VarietyError::Dimension(6))));
    }

    #[test]
    fn hyperplane_sections() {
        let (_, cone) = zero_set("x1^2 - x2*x3", 3, 5);
        let field = f(5);
        let m = HyperplaneSpec::new(&field, &[0, 0, 1]).unwrap();
        assert_eq!(hyperplane_intersection_count(&cone, &m), 5);
        let max = projective_intersection_counts(&cone).iter().map(|c| c.1).max().unwrap();
        assert_eq!(max, 9);
        let (_, plane) = zero_set("x1 + x2 + x3", 3, 5);
        let m = HyperplaneSpec::new(&field, &[1, 1, 1]).unwrap();
        assert_eq!(hyperplane_intersection_count(&plane, &m), 25);
        assert_eq!(HyperplaneSpec::new(&field, &[0, 5, 10]), Err(VarietyError::ZeroNormal));
    }

    #[test]
    fn plane_containment() {
        let g7 = f(7);
        let plane = parse_poly("x1 + x2 + x3", 3, g7).unwrap();
        assert_eq!(contains_plane_through_origin(&plane, g7).unwrap().unwrap().normal(), &[1, 1, 1]);
        let cone = parse_poly("x1^2 - x2*x3", 3, g7).unwrap();
        assert_eq!(contains_plane_through_origin(&cone, g7).unwrap(), None);
        let g13 = f(13);
        let sphere = parse_poly("x1^2 + x2^2 + x3^2", 3, g13).unwrap();
        assert_eq!(contains_plane_through_origin(&sphere, g13).unwrap(), None);
        let reducible = parse_poly("x1*x2 - x1*x3", 3, g7).unwrap();
        let found = contains_plane_through_origin(&reducible, g7).unwrap().unwrap();
        assert!(found.normal() == [1, 0, 0] || found.normal() == [0, 1, 6]);
        let inhom = parse_poly("x1^2 + x2", 3, g7).unwrap();
        assert_eq!(contains_plane_through_origin(&inhom, g7), Err(VarietyError::NotHomogeneous));
    }

    #[test]
    fn line_decompositions() {
        let (_, cone) = zero_set("x1^2 - x2*x3", 3, 5);
        let dec = line_decomposition(&cone).unwrap();
        assert_eq!(dec.count(), 6);
        let (_, sphere) = zero_set("x1^2 + x2^2 + x3^2", 3, 7);
        assert_eq!(line_decomposition(&sphere).unwrap().count(), 8);
        let (_, circle) = zero_set("x1^2 + x2^2", 2, 7);
        let dec = line_decomposition(&circle).unwrap();
        assert_eq!(dec.count(), 0);
        assert!(dec.contains_origin_only);
    }

    #[test]
    fn line_decomposition_reconstructs_the_set() {
        for text in ["x1^2 - x2*x3", "x1^3 + x2^3 + x3^3", "x1^5 + x2^3*x3^2"] {
            for p in [5u32, 7, 11] {
                let (_, h) = zero_set(text, 3, p);
                let dec = line_decomposition(&h).unwrap();
                let grid = *h.grid();
                let mut rebuilt = vec![0usize];
                for l in &dec.lines {
                    let base = grid.index(l);
                    rebuilt.extend((1..p).map(|s| grid.scale(base, s)));
                }
                rebuilt.sort_unstable();
                rebuilt.dedup();
                assert_eq!(rebuilt, h.indices());
            }
        }
    }

    #[test]
    fn line_decomposition_rejects_non_conic_sets() {
        let field = f(5);
        let sphere = parse_poly("x1^2 + x2^2 + x3^2", 3, field).unwrap();
        let h1 = enumerate_level_set(&sphere, field.one(), field).unwrap();
        assert!(matches!(line_decomposition(&h1), Err(VarietyError::NotConic(_))));
        let grid = Grid::new(field, 3).unwrap();
        let partial = VarietySlice::from_indices(grid, field.zero(), vec![0, 1, 2], false);
        assert!(matches!(line_decomposition(&partial), Err(VarietyError::NotConic(_))));
    }

    #[test]
    fn translate_incidences() {
        let (_, cone) = zero_set("x1^2 - x2*x3", 3, 7);
        assert_eq!(translate_incidence(&cone, &[0, 0, 0]).unwrap(), cone.len());
        let report = incidence_hypothesis_constant(&cone);
        assert!(report.constant <= 3.0, "{report:?}");
        let (_, plane) = zero_set("x1 + x2 + x3", 3, 7);
        assert_eq!(translate_incidence(&plane, &[1, 0, 0]).unwrap(), 0);
        assert_eq!(translate_incidence(&plane, &[1, 6, 0]).unwrap(), 49);
        assert!(translate_incidence(&plane, &[1, 0]).is_err());
    }

    #[test]
    fn incidence_constants() {
        let (_, cone) = zero_set("x1^2 - x2*x3", 3, 5);
        assert!(incidence_hypothesis_constant(&cone).constant <= 3.0);
        let (_, plane) = zero_set("x1 + x2 + x3", 3, 5);
        assert_eq!(incidence_hypothesis_constant(&plane).constant, 5.0);
        let (_, fermat) = zero_set("x1^3 + x2^3 + x3^3", 3, 7);
        let c = incidence_hypothesis_constant(&fermat).constant;
        assert!(c.is_finite() && c <= 3.0, "{c}");
    }

    #[test]
    fn translate_incidence_is_symmetric() {
        let (_, h) = zero_set("x1^3 + x2^3 + x3^3", 3, 7);
        let grid = *h.grid();
        for idx in (1..grid.size()).step_by(5) {
            let xi = grid.coords(idx);
            let neg = grid.coords(grid.neg(idx));
            assert_eq!(translate_incidence(&h, &xi).unwrap(), translate_incidence(&h, &neg).unwrap());
        }
    }

    #[test]
    fn plane_free_sections_are_small() {
        // Without a contained plane, every section has at most deg·q points.
        for text in ["x1^2 - x2*x3", "x1^2 + x2^2 + x3^2", "x1^3 + x2^3 + x3^3", "x1^4 + x2^3*x3 + x3^4"] {
            for p in [3u32, 5, 7, 11, 13, 17, 19, 23] {
                let field = f(p);
                let poly = parse_poly(text, 3, field).unwrap();
                let h = enumerate_level_set(&poly, field.zero(), field).unwrap();
                let deg = poly.degree().unwrap() as usize;
                let max = projective_intersection_counts(&h).iter().map(|c| c.1).max().unwrap();
                match contains_plane_through_origin(&poly, field).unwrap() {
                    None => assert!(max <= deg * p as usize, "{text} p={p} max={max}"),
                    Some(m) => assert_eq!(hyperplane_intersection_count(&h, &m), (p * p) as usize),
                }
            }
        }
    }
}
