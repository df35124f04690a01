use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// One open arc `(start, start + len)` of boundary parameters, mod 2π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub fn end(&self) -> f64 {
        self.start + self.len
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + 0.5 * self.len).rem_euclid(TAU)
    }

    /// Offset of `t` past the start, in `[0, 2π)`.
    fn offset(&self, t: f64) -> f64 {
        (t - self.start).rem_euclid(TAU)
    }

    pub fn contains(&self, t: f64) -> bool {
        if self.len >= TAU {
            return true;
        }
        let o = self.offset(t);
        o > 0.0 && o < self.len
    }

    /// Length of the overlap of this arc with the parameter interval `[lo, hi]`
    /// (with `hi - lo <= 2π`).
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if self.len >= TAU {
            return hi - lo;
        }
        let k0 = ((lo - self.start) / TAU).floor() as i64;
        let mut total = 0.0;
        for k in (k0 - 1)..=(k0 + 1) {
            let base = self.start + k as f64 * TAU;
            let lo2 = lo.max(base);
            let hi2 = hi.min(base + self.len);
            if hi2 > lo2 {
                total += hi2 - lo2;
            }
        }
        total
    }
}

/// Finite union of pairwise disjoint open arcs of boundary parameter.
///
/// Parameters are radians mod 2π. A single arc of length 2π is accepted and
/// represents the whole boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoundaryArcSet {
    arcs: Vec<Arc>,
}

impl TryFrom<Vec<[f64; 2]>> for BoundaryArcSet {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = v.into_iter().map(|p| (p[0], p[1])).collect();
        BoundaryArcSet::new(&pairs)
    }
}

impl From<BoundaryArcSet> for Vec<[f64; 2]> {
    fn from(s: BoundaryArcSet) -> Self {
        s.arcs.iter().map(|a| [a.start, a.end()]).collect()
    }
}

impl BoundaryArcSet {
    /// Builds the set from `(a, b)` pairs. The arc runs counterclockwise from
    /// `a` to `b`; `b < a` wraps through 0 and `b - a = 2π` is the full circle.
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        let mut arcs = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid("arc endpoints must be finite"));
            }
            let d = b - a;
            let len = if d > 0.0 && d <= TAU { d } else { d.rem_euclid(TAU) };
            if len <= 0.0 {
                return Err(Error::invalid(format!("arc ({a}, {b}) has zero length")));
            }
            arcs.push(Arc { start: a.rem_euclid(TAU), len });
        }
        Self::from_arcs(arcs)
    }

    fn from_arcs(mut arcs: Vec<Arc>) -> Result<Self> {
        arcs.sort_by(|x, y| x.start.total_cmp(&y.start));
        let total: f64 = arcs.iter().map(|a| a.len).sum();
        if total > TAU * (1.0 + 1e-14) {
            return Err(Error::invalid("arcs overlap: total length exceeds 2π"));
        }
        let n = arcs.len();
        if n > 1 {
            for i in 0..n {
                let a = arcs[i];
                let b = arcs[(i + 1) % n];
                let next = if i + 1 == n { b.start + TAU } else { b.start };
                if a.end() > next + 1e-14 {
                    return Err(Error::invalid(format!(
                        "arcs starting at {} and {} overlap",
                        a.start, b.start
                    )));
                }
            }
        }
        Ok(BoundaryArcSet { arcs })
    }

    /// The whole boundary.
    pub fn full() -> Self {
        BoundaryArcSet { arcs: vec![Arc { start: 0.0, len: TAU }] }
    }

    /// The empty set, used for complements of the full boundary.
    pub fn empty() -> Self {
        BoundaryArcSet { arcs: Vec::new() }
    }

    /// Upper half `(0, π)` of the boundary parameter circle.
    pub fn upper_half() -> Self {
        BoundaryArcSet { arcs: vec![Arc { start: 0.0, len: std::f64::consts::PI }] }
    }

    /// Single arc of length `len` centred at parameter `mid`.
    pub fn centered(mid: f64, len: f64) -> Result<Self> {
        Self::new(&[(mid - 0.5 * len, mid + 0.5 * len)])
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.total_length() >= TAU * (1.0 - 1e-14)
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.len).sum()
    }

    /// Membership in the open arcs.
    pub fn contains(&self, t: f64) -> bool {
        self.arcs.iter().any(|a| a.contains(t))
    }

    /// Parameter length of `[lo, hi] ∩ A`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        self.arcs.iter().map(|a| a.overlap(lo, hi)).sum()
    }

    /// Closed complementary arcs, returned as open arcs with the same
    /// endpoints (the endpoints have measure zero).
    pub fn complement(&self) -> BoundaryArcSet {
        if self.arcs.is_empty() {
            return Self::full();
        }
        if self.is_full() {
            return Self::empty();
        }
        let n = self.arcs.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.arcs[i];
            let b = self.arcs[(i + 1) % n];
            let next = if i + 1 == n { b.start + TAU } else { b.start };
            let len = next - a.end();
            if len > 1e-15 {
                out.push(Arc { start: a.end().rem_euclid(TAU), len });
            }
        }
        out.sort_by(|x, y| x.start.total_cmp(&y.start));
        BoundaryArcSet { arcs: out }
    }

    /// Each arc shrunk by `fraction` of its length at both ends.
    pub fn shrink(&self, fraction: f64) -> Result<BoundaryArcSet> {
        if !(0.0..0.5).contains(&fraction) {
            return Err(Error::invalid("shrink fraction must lie in [0, 0.5)"));
        }
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc {
                start: (a.start + fraction * a.len).rem_euclid(TAU),
                len: a.len * (1.0 - 2.0 * fraction),
            })
            .collect();
        Self::from_arcs(arcs)
    }

    /// Every arc of `self` lies inside an arc of `other`, endpoints allowed
    /// to coincide up to `tol`.
    pub fn is_subset_of(&self, other: &BoundaryArcSet, tol: f64) -> bool {
        self.arcs.iter().all(|a| {
            other.arcs.iter().any(|b| {
                if b.len >= TAU {
                    return true;
                }
                let o = b.offset(a.start);
                let o = if o > TAU - tol { o - TAU } else { o };
                o >= -tol && o + a.len <= b.len + tol
            })
        })
    }

    /// The closure of every arc of `self` lies in the open arcs of `other`
    /// with a margin of at least `margin`.
    pub fn is_compactly_contained_in(&self, other: &BoundaryArcSet, margin: f64) -> bool {
        self.arcs.iter().all(|a| {
            other.arcs.iter().any(|b| {
                if b.len >= TAU {
                    return true;
                }
                let o = b.offset(a.start);
                o >= margin && o + a.len <= b.len - margin
            })
        })
    }

    /// Parameter distance from `t` to the closure of the set (0 inside).
    pub fn parameter_distance(&self, t: f64) -> f64 {
        self.arcs
            .iter()
            .map(|a| {
                if a.contains(t) {
                    0.0
                } else {
                    let o = a.offset(t);
                    (o - a.len).max(0.0).min(TAU - o)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn wrapping_arc_contains_zero() {
        let a = BoundaryArcSet::new(&[(-0.5, 0.5)]).unwrap();
        assert!(a.contains(0.0));
        assert!(a.contains(TAU - 0.1));
        assert!(!a.contains(PI));
        assert!((a.total_length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints_are_excluded() {
        let a = BoundaryArcSet::upper_half();
        assert!(!a.contains(0.0));
        assert!(!a.contains(PI));
        assert!(a.contains(1.0));
    }

    #[test]
    fn overlapping_arcs_are_rejected() {
        assert!(BoundaryArcSet::new(&[(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(BoundaryArcSet::new(&[(0.0, 0.0)]).is_err());
        assert!(BoundaryArcSet::new(&[(5.0, 1.0), (0.5, 2.0)]).is_err());
    }

    #[test]
    fn full_circle_is_accepted() {
        let a = BoundaryArcSet::new(&[(0.0, TAU)]).unwrap();
        assert!(a.is_full());
        assert!(a.complement().is_empty());
    }

    #[test]
    fn serde_round_trip() {
        let a = BoundaryArcSet::new(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[0.0,1.0],[2.0,3.0]]");
        let b: BoundaryArcSet = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<BoundaryArcSet>("[[0.0,2.0],[1.0,3.0]]").is_err());
    }

    #[test]
    fn shrink_is_compactly_contained() {
        let a = BoundaryArcSet::upper_half();
        let k = a.shrink(0.25).unwrap();
        assert!(k.is_compactly_contained_in(&a, 0.1));
        assert!(k.is_subset_of(&a, 0.0));
        assert!(!a.is_compactly_contained_in(&a, 1e-9));
    }

    #[test]
    fn overlap_with_wrapping_interval() {
        let a = BoundaryArcSet::new(&[(-0.5, 0.5)]).unwrap();
        assert!((a.overlap(-0.2, 0.1) - 0.3).abs() < 1e-14);
        assert!((a.overlap(TAU - 0.2, TAU + 0.1) - 0.3).abs() < 1e-14);
        assert!((a.overlap(0.4, 0.6) - 0.1).abs() < 1e-14);
        assert!(a.overlap(1.0, 2.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn complement_partitions_the_circle(
            starts in proptest::collection::vec(0.0..TAU, 1..5),
            frac in 0.05f64..0.9,
        ) {
            let mut s = starts.clone();
            s.sort_by(f64::total_cmp);
            s.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let n = s.len();
            let mut pairs = Vec::new();
            for i in 0..n {
                let next = if i + 1 == n { s[0] + TAU } else { s[i + 1] };
                pairs.push((s[i], s[i] + frac * (next - s[i])));
            }
            let a = BoundaryArcSet::new(&pairs).unwrap();
            let c = a.complement();
            prop_assert!((a.total_length() + c.total_length() - TAU).abs() < 1e-12);
            for k in 0..200 {
                let t = k as f64 * TAU / 200.0 + 1e-7;
                prop_assert!(!(a.contains(t) && c.contains(t)));
            }
        }
    }
}
