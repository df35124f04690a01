//! Fixtures shared by the criterion benchmarks.

use crosslab::{BoundaryArcSet, PlanarDomain, C64};

/// Unit disk with the upper half circle as arc set.
pub fn half_arc_disk() -> (PlanarDomain, BoundaryArcSet) {
    (PlanarDomain::unit_disk(), BoundaryArcSet::upper_half())
}

/// Points spread over the disk of radius `r`.
pub fn spiral(count: usize, r: f64) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let s = (k as f64 + 0.5) / count as f64;
            C64::from_polar(r * s.sqrt(), 2.399_963 * k as f64)
        })
        .collect()
}
