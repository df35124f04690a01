use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{
    envelope_membership, gonchar_bound_check, omega_sum, sup_on_cross, sup_on_plural, BoundReport, CrossSpec,
    EnvelopeMembership, FactorSpec, SupCurve, SUP_SAMPLES,
};
use crate::error::{Error, Result};
use crate::C64;

/// Rejection draws allowed per requested sample.
const MAX_DRAWS_PER_SAMPLE: usize = 2_000;
/// Inward step used to probe continuity of the restriction at `A × B`.
const CONTINUITY_STEP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVerification {
    pub membership_checked: usize,
    pub membership_failures: usize,
    pub bound: BoundReport,
    pub sup_a: f64,
    pub sup_x: f64,
    /// Largest `|f(a, b) − f(a', b')| / step` over plural-set samples and
    /// inward neighbours at distance `step`.
    pub continuity_defect: f64,
}

impl BoundaryVerification {
    pub fn passed(&self) -> bool {
        self.membership_failures == 0 && self.bound.passed() && self.continuity_defect.is_finite()
    }
}

fn point_in(factor: &FactorSpec, rng: &mut ChaCha8Rng) -> C64 {
    let [x0, y0, x1, y1] = factor.domain.bbox();
    loop {
        let z = C64::new(x0 + (x1 - x0) * rng.gen::<f64>(), y0 + (y1 - y0) * rng.gen::<f64>());
        if factor.domain.contains(z) {
            return z;
        }
    }
}

fn point_on_plural(factor: &FactorSpec, rng: &mut ChaCha8Rng) -> C64 {
    match factor.plural_curve() {
        SupCurve::Boundary(region) => {
            // Interior set: a point of the region.
            let [x0, y0, x1, y1] = region.bbox();
            loop {
                let z = C64::new(x0 + (x1 - x0) * rng.gen::<f64>(), y0 + (y1 - y0) * rng.gen::<f64>());
                if region.contains(z) {
                    return z;
                }
            }
        }
        curve => curve.point(rng.gen::<f64>()),
    }
}

/// `n` points of the envelope drawn uniformly from the product of the
/// factors by rejection.
pub fn sample_envelope(spec: &CrossSpec, n: usize, seed: u64) -> Result<Vec<crate::cross::CrossPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n.saturating_mul(MAX_DRAWS_PER_SAMPLE) {
        if out.len() == n {
            break;
        }
        let coords: Vec<C64> = spec.factors.iter().map(|f| point_in(f, &mut rng)).collect();
        let p = spec.point(&coords)?;
        if omega_sum(spec, &p)? < 1.0 {
            out.push(p);
        }
    }
    if out.len() < n {
        return Err(Error::Empty(format!("envelope: {} of {n} samples found", out.len())));
    }
    Ok(out)
}

/// Checks a holomorphic function of the closed product against the
/// envelope: cross points lie in the closed envelope, the two-constant bound
/// holds at `samples` envelope points, and the restriction to `A × B` is
/// continuous from inside.
pub fn verify_boundary_extension(
    spec: &CrossSpec,
    f: &(dyn Fn(&[C64]) -> C64 + Sync),
    samples: usize,
    seed: u64,
    slack: f64,
) -> Result<BoundaryVerification> {
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let abs = |p: &[C64]| f(p).norm();
    let sup_a = sup_on_plural(spec, &abs, SUP_SAMPLES);
    let sup_x = sup_on_cross(spec, &abs, SUP_SAMPLES).max(sup_a);

    // Cross points: one factor free, the others on their plural sets.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = spec.n();
    let mut cross_pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let free = i % n;
        let coords: Vec<C64> = spec
            .factors
            .iter()
            .enumerate()
            .map(|(j, fac)| if j == free { point_in(fac, &mut rng) } else { point_on_plural(fac, &mut rng) })
            .collect();
        cross_pts.push(coords);
    }
    let membership_failures = cross_pts
        .par_iter()
        .map(|c| {
            let p = spec.point(c)?;
            Ok(matches!(envelope_membership(spec, &p)?, EnvelopeMembership::Outside) as usize)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();

    let env = sample_envelope(spec, samples, seed)?;
    let vals: Vec<_> = env.into_par_iter().map(|p| {
        let v = f(&p.coords).norm();
        (p, v)
    }).collect();
    let bound = gonchar_bound_check(spec, &vals, sup_a, sup_x, slack)?;

    // Continuity at A × B: each plural coordinate moved a small step towards
    // an interior point of its domain.
    let continuity_defect = (0..samples.min(256))
        .map(|_| {
            let a: Vec<C64> = spec.factors.iter().map(|fac| point_on_plural(fac, &mut rng)).collect();
            let b: Vec<C64> = a
                .iter()
                .zip(&spec.factors)
                .map(|(z, fac)| {
                    let c = fac.domain.interior_point();
                    z + CONTINUITY_STEP * (c - z) / (c - z).norm().max(1e-300)
                })
                .collect();
            (f(&a) - f(&b)).norm() / CONTINUITY_STEP
        })
        .fold(0.0, f64::max);

    Ok(BoundaryVerification {
        membership_checked: cross_pts.len(),
        membership_failures,
        bound,
        sup_a,
        sup_x,
        continuity_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::TestFunction;
    use crate::geometry::BoundaryArcSet;
    use std::f64::consts::PI;

    fn arcs_cross(len: f64) -> CrossSpec {
        let b = BoundaryArcSet::centered(0.0, len).unwrap();
        CrossSpec::new(vec![FactorSpec::disk_arcs(b.clone()).unwrap(), FactorSpec::disk_arcs(b).unwrap()]).unwrap()
    }

    #[test]
    fn exp_sum_on_long_arcs() {
        let f = |p: &[C64]| TestFunction::ExpSum.eval(p);
        let r = verify_boundary_extension(&arcs_cross(1.5 * PI), &f, 400, 7, 1e-9).unwrap();
        assert!(r.passed(), "{:?}", (r.membership_failures, r.bound.violations, r.bound.min_residual));
        assert_eq!(r.bound.rows.len(), 400);
        // |∇ e^{z+w}| ≤ √2·e² on the closed bidisk.
        assert!(r.continuity_defect < 2f64.sqrt() * 2f64.exp().powi(2) + 1e-3, "{}", r.continuity_defect);
    }

    #[test]
    fn rational_product_and_short_arcs() {
        let f = |p: &[C64]| TestFunction::RationalProduct { a: 3.0 }.eval(p);
        let r = verify_boundary_extension(&arcs_cross(1.5 * PI), &f, 300, 1, 1e-9).unwrap();
        assert!(r.passed());
        let short = verify_boundary_extension(&arcs_cross(PI / 4.0), &f, 300, 1, 1e-9).unwrap();
        assert!(short.passed());
        assert!(short.bound.min_residual >= -1e-9);
        let mean = |r: &BoundaryVerification| r.bound.rows.iter().map(|x| x.omega).sum::<f64>() / r.bound.rows.len() as f64;
        assert!(mean(&short) > mean(&r));
    }

    #[test]
    fn sampling_is_seeded() {
        let s = arcs_cross(PI);
        let a = sample_envelope(&s, 50, 3).unwrap();
        let b = sample_envelope(&s, 50, 3).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!(omega_sum(&s, p).unwrap() < 1.0);
        }
    }

    #[test]
    fn function_violating_the_bound_is_caught() {
        // |f| = 1 on the cross but large in the envelope: not holomorphic.
        let f = |p: &[C64]| C64::new(1.0 + 10.0 * (1.0 - p[0].norm()) * (1.0 - p[1].norm()), 0.0);
        let r = verify_boundary_extension(&arcs_cross(1.5 * PI), &f, 200, 2, 1e-9).unwrap();
        assert!(r.bound.violations > 0);
    }
}
