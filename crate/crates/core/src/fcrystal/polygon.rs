use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Slope = Ratio<i64>;

/// A Newton polygon as a multiset of slopes, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct NewtonPolygon {
    slopes: Vec<(Slope, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeJson {
    pub num: i64,
    pub den: i64,
    pub mult: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolygonJson {
    pub slopes: Vec<SlopeJson>,
}

impl NewtonPolygon {
    /// Build from `(slope, multiplicity)` pairs in any order; equal slopes merge
    /// and zero multiplicities vanish.
    pub fn from_slopes(parts: impl IntoIterator<Item = (Slope, usize)>) -> Self {
        let mut merged: BTreeMap<Slope, usize> = BTreeMap::new();
        for (s, m) in parts {
            if m > 0 {
                *merged.entry(s).or_default() += m;
            }
        }
        NewtonPolygon {
            slopes: merged.into_iter().collect(),
        }
    }

    /// Isoclinic polygon of the given slope.
    pub fn isoclinic(slope: Slope, mult: usize) -> Self {
        Self::from_slopes([(slope, mult)])
    }

    pub fn slopes(&self) -> &[(Slope, usize)] {
        &self.slopes
    }

    pub fn rank(&self) -> usize {
        self.slopes.iter().map(|(_, m)| m).sum()
    }

    pub fn min_slope(&self) -> Option<Slope> {
        self.slopes.first().map(|(s, _)| *s)
    }

    pub fn multiplicity(&self, slope: Slope) -> usize {
        self.slopes.iter().find(|(s, _)| *s == slope).map_or(0, |(_, m)| *m)
    }

    /// Sum of slopes counted with multiplicity.
    pub fn total(&self) -> Slope {
        self.slopes.iter().map(|(s, m)| *s * *m as i64).sum()
    }

    pub fn union(&self, other: &NewtonPolygon) -> NewtonPolygon {
        Self::from_slopes(self.slopes.iter().chain(&other.slopes).copied())
    }

    pub fn is_symmetric(&self) -> bool {
        self.slopes
            .iter()
            .all(|(s, m)| self.multiplicity(Slope::one() - s) == *m)
    }

    /// Each slope `a/b` in lowest terms has multiplicity divisible by `b`.
    pub fn has_integral_breakpoints(&self) -> bool {
        self.slopes.iter().all(|(s, m)| *m as i64 % s.denom() == 0)
    }

    /// Violations of the polarized-crystal polygon invariants, empty when all hold.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some((s, _)) = self
            .slopes
            .iter()
            .find(|(s, _)| *s < Slope::zero() || *s > Slope::one())
        {
            out.push(format!("slope {s} outside [0,1]"));
        }
        if self.total() * 2 != Slope::from_integer(self.rank() as i64) {
            out.push(format!("slope sum {} is not rank/2 = {}/2", self.total(), self.rank()));
        }
        if !self.is_symmetric() {
            out.push("not symmetric under λ ↦ 1-λ".into());
        }
        if !self.has_integral_breakpoints() {
            out.push("breakpoints not integral".into());
        }
        out
    }

    /// Slopes of the lower convex hull of the points `(i, v_i)`, where
    /// `valuations[i]` is the valuation of the coefficient of `x^i` (`None` = +∞).
    /// The slope attached to a segment is the valuation of the corresponding roots.
    pub fn from_coefficient_valuations(valuations: &[Option<u32>]) -> Result<Self> {
        let points: Vec<(i64, i64)> = valuations
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as i64, v as i64)))
            .collect();
        match (points.first(), points.last()) {
            (Some(&(0, _)), Some(&(last, _))) if last as usize == valuations.len() - 1 => {}
            _ => {
                return Err(Error::InsufficientPrecision(
                    "extreme coefficient of the characteristic polynomial vanishes at working precision".into(),
                ))
            }
        }
        let hull = lower_hull(&points);
        Ok(Self::from_slopes(hull.windows(2).map(|w| {
            let ((x1, y1), (x2, y2)) = (w[0], w[1]);
            (Slope::new(y1 - y2, x2 - x1), (x2 - x1) as usize)
        })))
    }

    /// Divide every slope by `k` (passing from σ^k-linear to σ-semilinear slopes).
    pub fn scaled_down(&self, k: i64) -> NewtonPolygon {
        Self::from_slopes(self.slopes.iter().map(|(s, m)| (*s / k, *m)))
    }

    pub fn to_json(&self) -> PolygonJson {
        PolygonJson {
            slopes: self
                .slopes
                .iter()
                .map(|(s, m)| SlopeJson {
                    num: *s.numer(),
                    den: *s.denom(),
                    mult: *m,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &PolygonJson) -> Result<Self> {
        if j.slopes.iter().any(|s| s.den <= 0) {
            return Err(Error::Json("slope denominator must be positive".into()));
        }
        Ok(Self::from_slopes(
            j.slopes.iter().map(|s| (Slope::new(s.num, s.den), s.mult)),
        ))
    }
}

impl fmt::Display for NewtonPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.slopes.iter().map(|(s, m)| format!("{s}×{m}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Lower convex hull of points sorted by x, monotone chain.
fn lower_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn q(n: i64, d: i64) -> Slope {
        Slope::new(n, d)
    }

    /// Brute force: a segment (i,k) is on the lower hull iff no point lies strictly below it,
    /// and every root valuation is the slope of the hull over the unit interval it covers.
    fn brute_force_slopes(vals: &[Option<u32>]) -> Vec<Slope> {
        let pts: Vec<(i64, i64)> = vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as i64, v as i64)))
            .collect();
        let n = vals.len() as i64 - 1;
        // hull height at integer x: min over pairs spanning x of linear interpolation
        let height = |x: i64| -> Slope {
            let mut best: Option<Slope> = None;
            for &(x1, y1) in &pts {
                for &(x2, y2) in &pts {
                    if x1 <= x && x <= x2 && x1 < x2 {
                        let h = Slope::from_integer(y1) + q((y2 - y1) * (x - x1), x2 - x1);
                        best = Some(best.map_or(h, |b: Slope| b.min(h)));
                    }
                }
                if x1 == x {
                    let h = Slope::from_integer(y1);
                    best = Some(best.map_or(h, |b: Slope| b.min(h)));
                }
            }
            best.unwrap()
        };
        let mut out: Vec<Slope> = (0..n).map(|x| height(x) - height(x + 1)).collect();
        out.sort();
        out
    }

    #[test]
    fn hull_of_simple_polynomials() {
        // x^2 - p: both roots of valuation 1/2
        let np = NewtonPolygon::from_coefficient_valuations(&[Some(1), None, Some(0)]).unwrap();
        assert_eq!(np, NewtonPolygon::isoclinic(q(1, 2), 2));
        // (x-1)(x-p) = x^2 - (1+p)x + p
        let np = NewtonPolygon::from_coefficient_valuations(&[Some(1), Some(0), Some(0)]).unwrap();
        assert_eq!(np.to_string(), "{0×1, 1×1}");
        assert!(NewtonPolygon::from_coefficient_valuations(&[None, Some(0), Some(0)]).is_err());
    }

    #[test]
    fn polygon_invariants() {
        let ok = NewtonPolygon::from_slopes([(q(1, 4), 4), (q(3, 4), 4)]);
        assert!(ok.invariant_violations().is_empty());
        let thirds = NewtonPolygon::from_slopes([(q(1, 3), 3), (q(2, 3), 3)]);
        assert!(thirds.invariant_violations().is_empty());
        let asym = NewtonPolygon::from_slopes([(q(0, 1), 2), (q(1, 2), 2)]);
        assert!(!asym.is_symmetric());
        assert_eq!(asym.invariant_violations().len(), 2);
        let broken = NewtonPolygon::from_slopes([(q(1, 4), 2), (q(3, 4), 2)]);
        assert!(!broken.has_integral_breakpoints());
    }

    #[test]
    fn json_shape() {
        let np = NewtonPolygon::from_slopes([(q(3, 4), 4), (q(1, 4), 4)]);
        let s = serde_json::to_string(&np.to_json()).unwrap();
        assert_eq!(
            s,
            r#"{"slopes":[{"num":1,"den":4,"mult":4},{"num":3,"den":4,"mult":4}]}"#
        );
        assert_eq!(NewtonPolygon::from_json(&np.to_json()).unwrap(), np);
    }

    #[test]
    fn union_is_multiset_union() {
        let a = NewtonPolygon::from_slopes([(q(0, 1), 2), (q(1, 1), 2)]);
        let b = NewtonPolygon::isoclinic(q(1, 2), 2);
        assert_eq!(a.union(&b).to_string(), "{0×2, 1/2×2, 1×2}");
        assert_eq!(a.union(&b).rank(), 6);
    }

    proptest! {
        #[test]
        fn hull_matches_brute_force(
            vals in proptest::collection::vec(proptest::option::weighted(0.8, 0u32..12), 1..10),
            lead in 0u32..3,
        ) {
            let mut vals = vals;
            vals[0] = Some(vals[0].unwrap_or(5) + 3);
            vals.push(Some(lead));
            let np = NewtonPolygon::from_coefficient_valuations(&vals).unwrap();
            let mut flat: Vec<Slope> = np.slopes().iter().flat_map(|(s, m)| std::iter::repeat_n(*s, *m)).collect();
            flat.sort();
            prop_assert_eq!(flat, brute_force_slopes(&vals));
        }
    }
}
