//! Analytic oracles written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use crosslab::C64;

/// Harmonic measure at `z` (|z| < 1) of the circle arc `(a, b)`, from the
/// angle the arc subtends at `z`.
pub fn arc_measure(z: C64, a: f64, b: f64) -> f64 {
    let p = C64::from_polar(1.0, a) - z;
    let q = C64::from_polar(1.0, b) - z;
    let theta = (q / p).arg().rem_euclid(2.0 * PI);
    theta / PI - (b - a) / (2.0 * PI)
}

/// Measure of the complement of the arcs, i.e. the function vanishing on them.
pub fn complement_measure(z: C64, arcs: &[(f64, f64)]) -> f64 {
    1.0 - arcs.iter().map(|&(a, b)| arc_measure(z, a, b)).sum::<f64>()
}

/// Extremal function of the disk of radius `r` in the unit disk.
pub fn concentric(z: C64, r: f64) -> f64 {
    let m = z.norm();
    if m <= r {
        0.0
    } else {
        (m / r).ln() / (1.0 / r).ln()
    }
}

/// Smallest root of `δ + 2cδ/(1 − δ) = s` by bisection on `[0, 1/(2c) ∧ 1)`.
pub fn gluing_bisect(s: f64, c: f64) -> f64 {
    let g = |d: f64| d + 2.0 * c * d / (1.0 - d) - s;
    let (mut lo, mut hi) = (0.0, (1.0f64).min(1.0 / (2.0 * c)) * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-angle spiral of `count` points in the disk of radius `r`.
pub fn spiral(count: usize, r: f64) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let s = (k as f64 + 0.5) / count as f64;
            C64::from_polar(r * s.sqrt(), 2.399_963_229_728_653 * k as f64)
        })
        .collect()
}
