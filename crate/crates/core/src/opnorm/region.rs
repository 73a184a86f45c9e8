//! Exact rational tests for which exponent pairs can be bounded.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::exponent::{ExponentPair, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionVerdict {
    Inside,
    Boundary,
    Outside,
}

/// Vertices of the averaging region in the `(1/p, 1/r)` plane, counterclockwise.
pub fn averaging_region_vertices() -> [(Rational, Rational); 4] {
    let r = Rational::new;
    [(r(0, 1), r(0, 1)), (r(3, 4), r(1, 4)), (r(1, 1), r(1, 1)), (r(0, 1), r(1, 1))]
}

/// Position of `(1/p, 1/r)` relative to the convex hull of
/// `(0,0), (3/4,1/4), (1,1), (0,1)`.
pub fn averaging_region_verdict(pr: &ExponentPair) -> RegionVerdict {
    let (x, y) = (pr.inv_p(), pr.inv_r());
    let v = averaging_region_vertices();
    let mut on_edge = false;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let cross = (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
        if cross < Rational::zero() {
            return RegionVerdict::Outside;
        }
        if cross.is_zero() {
            on_edge = true;
        }
    }
    if on_edge {
        RegionVerdict::Boundary
    } else {
        RegionVerdict::Inside
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NecessaryVerdict {
    /// Both necessary conditions hold.
    Satisfied,
    /// At least one necessary condition fails.
    Violated,
    /// The variety contains a hyperplane: only `L^p → L^∞` bounds are possible.
    OnlyTrivial,
}

/// Largest admissible `1/r` for an extension bound from `L^p(dσ)` on a
/// variety in `F_q^d` containing an `α`-dimensional affine subspace:
/// `1/r ≤ (d−1)/(2d)` and `1/r ≤ (1 − 1/p)(d−1−α)/(d−α)`. `None` when
/// `α = d − 1`.
pub fn extension_max_inv_r(d: u32, alpha: u32, inv_p: Rational) -> Option<Rational> {
    assert!(d >= 2 && alpha < d, "need 0 ≤ α ≤ d − 1");
    if alpha == d - 1 {
        return None;
    }
    let (d, a) = (d as i64, alpha as i64);
    let first = Rational::new(d - 1, 2 * d);
    let second = (Rational::one() - inv_p) * Rational::new(d - 1 - a, d - a);
    Some(first.min(second))
}

/// Whether `pr` meets the necessary conditions for an extension bound.
pub fn extension_necessary_region(d: u32, alpha: u32, pr: &ExponentPair) -> NecessaryVerdict {
    match extension_max_inv_r(d, alpha, pr.inv_p()) {
        None => NecessaryVerdict::OnlyTrivial,
        Some(max) if pr.inv_r() <= max => NecessaryVerdict::Satisfied,
        Some(_) => NecessaryVerdict::Violated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(x: (i64, i64), y: (i64, i64)) -> ExponentPair {
        ExponentPair::from_reciprocals(Rational::new(x.0, x.1), Rational::new(y.0, y.1)).unwrap()
    }

    #[test]
    fn averaging_verdicts() {
        for (x, y) in averaging_region_vertices() {
            let pr = ExponentPair::from_reciprocals(x, y).unwrap();
            assert_eq!(averaging_region_verdict(&pr), RegionVerdict::Boundary);
        }
        assert_eq!(averaging_region_verdict(&pair((1, 2), (1, 4))), RegionVerdict::Inside);
        assert_eq!(averaging_region_verdict(&pair((1, 2), (1, 8))), RegionVerdict::Outside);
        assert_eq!(averaging_region_verdict(&pair((3, 8), (1, 8))), RegionVerdict::Boundary);
        assert_eq!(averaging_region_verdict(&pair((1, 2), (1, 2))), RegionVerdict::Inside);
        assert_eq!(averaging_region_verdict(&pair((1, 2), (1, 1))), RegionVerdict::Boundary);
        assert_eq!(averaging_region_verdict(&pair((7, 8), (1, 2))), RegionVerdict::Outside);
    }

    #[test]
    fn averaging_region_matches_half_plane_description() {
        // Inside or on the hull iff 1/r ≤ 1, 1/r ≥ (1/p)/3 and 1/r ≥ 3/p − 2.
        for a in 0..=24 {
            for b in 0..=24 {
                let (x, y) = (Rational::new(a, 24), Rational::new(b, 24));
                let pr = ExponentPair::from_reciprocals(x, y).unwrap();
                let three = Rational::from_integer(3);
                let inside = y >= x / three && y >= three * x - Rational::from_integer(2);
                assert_eq!(averaging_region_verdict(&pr) != RegionVerdict::Outside, inside, "{pr}");
            }
        }
    }

    #[test]
    fn extension_conditions() {
        let r = Rational::new;
        assert_eq!(extension_max_inv_r(3, 1, r(1, 2)), Some(r(1, 4)));
        assert_eq!(extension_max_inv_r(3, 1, r(0, 1)), Some(r(1, 3)));
        assert_eq!(extension_max_inv_r(3, 2, r(1, 2)), None);
        assert_eq!(extension_necessary_region(3, 1, &ExponentPair::integers(2, 4)), NecessaryVerdict::Satisfied);
        assert_eq!(extension_necessary_region(3, 1, &ExponentPair::integers(2, 3)), NecessaryVerdict::Violated);
        assert_eq!(extension_necessary_region(3, 1, &ExponentPair::integers(0, 3)), NecessaryVerdict::Satisfied);
        assert_eq!(extension_necessary_region(3, 2, &ExponentPair::integers(2, 0)), NecessaryVerdict::OnlyTrivial);
        assert_eq!(extension_necessary_region(3, 0, &ExponentPair::integers(1, 0)), NecessaryVerdict::Satisfied);
    }
}
