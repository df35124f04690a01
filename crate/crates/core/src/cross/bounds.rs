use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain, PluralSet};
use crate::C64;

use super::{CrossPoint, CrossSpec, FactorSpec};

/// Default number of product samples for sup estimates.
pub const SUP_SAMPLES: usize = 10_000;

/// `m(1 − ω) + M·ω`.
pub fn two_constant_bound(m: f64, big_m: f64, omega: f64) -> Result<f64> {
    if m.is_nan() || big_m.is_nan() || m > big_m {
        return Err(Error::invalid(format!("need m <= M, got m = {m}, M = {big_m}")));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::invalid(format!("omega {omega} must lie in [0, 1]")));
    }
    if omega == 1.0 || m == big_m {
        return Ok(big_m);
    }
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((m + (big_m - m) * omega).min(big_m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub coords: Vec<C64>,
    pub omega: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub min_residual: f64,
    pub violations: usize,
    pub slack: f64,
}

impl BoundReport {
    pub fn new(rows: Vec<BoundRow>, slack: f64) -> Self {
        let min_residual = rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        let violations = rows.iter().filter(|r| r.residual < -slack).count();
        BoundReport { rows, min_residual, violations, slack }
    }

    pub fn merge(mut self, other: BoundReport) -> Self {
        self.rows.extend(other.rows);
        self.min_residual = self.min_residual.min(other.min_residual);
        self.violations += other.violations;
        self.slack = self.slack.max(other.slack);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Columns `re_1, im_1, …, re_N, im_N, omega, lhs, rhs, residual`.
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.coords.len());
        let mut s = String::new();
        for j in 1..=n {
            let _ = write!(s, "re_{j},im_{j},");
        }
        s.push_str("omega,lhs,rhs,residual\n");
        for r in &self.rows {
            for z in &r.coords {
                let _ = write!(s, "{},{},", z.re, z.im);
            }
            let _ = writeln!(s, "{},{},{},{}", r.omega, r.lhs, r.rhs, r.residual);
        }
        s
    }
}

/// Checks `|f(z)| ≤ sup_A^{1−ω(z)}·sup_X^{ω(z)}` at envelope samples given as
/// `(point, |f(point)|)`.
pub fn gonchar_bound_check(
    spec: &CrossSpec,
    samples: &[(CrossPoint, f64)],
    sup_a: f64,
    sup_x: f64,
    slack: f64,
) -> Result<BoundReport> {
    if !(sup_x.is_finite() && sup_a >= 0.0 && sup_a <= sup_x) {
        return Err(Error::invalid(format!("need 0 <= sup_A <= sup_X < inf, got {sup_a}, {sup_x}")));
    }
    if !(slack >= 0.0) {
        return Err(Error::invalid("slack must be non-negative"));
    }
    let rows = samples
        .par_iter()
        .map(|(p, value)| {
            let omega = super::omega_sum(spec, p)?;
            if omega >= 1.0 {
                return Err(Error::not_admissible(p.coords[0], format!("sample has omega = {omega} >= 1")));
            }
            let rhs = if sup_a == sup_x { sup_x } else { sup_a.powf(1.0 - omega) * sup_x.powf(omega) };
            Ok(BoundRow { coords: p.coords.clone(), omega, lhs: *value, rhs, residual: rhs - value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::new(rows, slack))
}

/// Curve parametrized by `u ∈ [0, 1]` on which a sup is sampled.
#[derive(Clone, Debug)]
pub enum SupCurve {
    /// The whole boundary curve of a domain, periodic in `u`.
    Boundary(PlanarDomain),
    /// The closure of an arc set, arcs laid end to end.
    Arcs(PlanarDomain, BoundaryArcSet),
}

impl SupCurve {
    pub fn point(&self, u: f64) -> C64 {
        match self {
            SupCurve::Boundary(d) => d.point(TAU * u.rem_euclid(1.0)),
            SupCurve::Arcs(d, a) => {
                let mut s = u.clamp(0.0, 1.0) * a.total_length();
                let arcs = a.arcs();
                for (k, arc) in arcs.iter().enumerate() {
                    if s <= arc.len || k + 1 == arcs.len() {
                        return d.point(arc.start + s.min(arc.len));
                    }
                    s -= arc.len;
                }
                unreachable!("arc set is non-empty")
            }
        }
    }

    fn periodic(&self) -> bool {
        matches!(self, SupCurve::Boundary(_))
    }

    fn wrap(&self, u: f64) -> f64 {
        if self.periodic() {
            u.rem_euclid(1.0)
        } else {
            u.clamp(0.0, 1.0)
        }
    }
}

impl FactorSpec {
    /// Curve carrying the sup of a holomorphic function over `Ā_j`: the arcs,
    /// or the boundary of an interior region.
    pub fn plural_curve(&self) -> SupCurve {
        match &self.plural {
            PluralSet::Arcs { arcs } => SupCurve::Arcs(self.domain.clone(), arcs.clone()),
            PluralSet::Interior { region } => SupCurve::Boundary(region.clone()),
        }
    }

    /// Curve carrying the sup of a holomorphic function over `D̄_j`.
    pub fn boundary_curve(&self) -> SupCurve {
        SupCurve::Boundary(self.domain.clone())
    }
}

/// Sup of `f` over a product of curves: a dense grid with about `samples`
/// points, then compass search from the best grid points.
pub fn sup_over_product(curves: &[SupCurve], f: &(dyn Fn(&[C64]) -> f64 + Sync), samples: usize) -> f64 {
    let dim = curves.len();
    assert!(dim > 0);
    let per_axis = ((samples as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let eval = |u: &[f64]| {
        let z: Vec<C64> = curves.iter().zip(u).map(|(c, &t)| c.point(t)).collect();
        f(&z)
    };
    let grid_u = |c: &SupCurve, i: usize| {
        if c.periodic() {
            i as f64 / per_axis as f64
        } else {
            i as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(dim as u32);
    let mut scored: Vec<(f64, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let u: Vec<f64> = curves
                .iter()
                .map(|c| {
                    let i = k % per_axis;
                    k /= per_axis;
                    grid_u(c, i)
                })
                .collect();
            (eval(&u), u)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(4);
    let step0 = 1.0 / per_axis as f64;
    scored
        .into_par_iter()
        .map(|(mut best, mut u)| {
            let mut step = step0;
            while step > 1e-13 {
                let mut moved = false;
                for d in 0..dim {
                    for sign in [1.0, -1.0] {
                        let mut v = u.clone();
                        v[d] = curves[d].wrap(v[d] + sign * step);
                        let val = eval(&v);
                        if val > best {
                            best = val;
                            u = v;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `sup_{A_1×…×A_N} f` for `f` holomorphic near the closure.
pub fn sup_on_plural(spec: &CrossSpec, f: &(dyn Fn(&[C64]) -> f64 + Sync), samples: usize) -> f64 {
    let curves: Vec<SupCurve> = spec.factors.iter().map(FactorSpec::plural_curve).collect();
    sup_over_product(&curves, f, samples)
}

/// `sup_X f` for `f` holomorphic near the closure of every term of `X`.
pub fn sup_on_cross(spec: &CrossSpec, f: &(dyn Fn(&[C64]) -> f64 + Sync), samples: usize) -> f64 {
    (0..spec.n())
        .map(|j| {
            let curves: Vec<SupCurve> = spec
                .factors
                .iter()
                .enumerate()
                .map(|(k, fa)| if k == j { fa.boundary_curve() } else { fa.plural_curve() })
                .collect();
            sup_over_product(&curves, f, samples)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest `δ ≥ 0` with `δ + 2cδ/(1 − δ) = s`, or with `N` in place of `c`
/// and `1 − Nδ` in the denominator when `n_fold` is given.
pub fn gluing_delta(s: f64, c: f64, n_fold: Option<usize>) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::invalid(format!("s = {s} must lie in [0, 1)")));
    }
    gluing_root(s, c, n_fold)
}

/// The smaller root of the gluing quadratic for any `s ≥ 0`, including the
/// limit `s = 1` of points in `A × B`.
pub(crate) fn gluing_root(s: f64, c: f64, n_fold: Option<usize>) -> Result<f64> {
    let (a, b) = match n_fold {
        Some(n) if n >= 2 => {
            let n = n as f64;
            (n, 1.0 + 2.0 * n + s * n)
        }
        Some(n) => return Err(Error::invalid(format!("n_fold = {n} must be at least 2"))),
        None if c > 0.0 && c.is_finite() => (1.0, 1.0 + 2.0 * c + s),
        None => return Err(Error::invalid(format!("c = {c} must be positive"))),
    };
    // a δ² − b δ + s = 0; the smaller root without cancellation.
    let disc = (b * b - 4.0 * a * s).max(0.0);
    Ok(2.0 * s / (b + disc.sqrt()))
}

/// Upper limit on `δ` keeping the gluing denominators positive.
pub fn gluing_cap(c: f64, n_fold: Option<usize>) -> f64 {
    match n_fold {
        Some(n) => 1.0 / n as f64,
        None => (1.0f64).min(1.0 / (2.0 * c)),
    }
}

/// `|δ + 2cδ/(1 − δ) − s|` (or the `N`-fold form).
pub fn gluing_residual(s: f64, c: f64, n_fold: Option<usize>, delta: f64) -> f64 {
    let lhs = match n_fold {
        Some(n) => {
            let n = n as f64;
            delta + 2.0 * n * delta / (1.0 - n * delta)
        }
        None => delta + 2.0 * c * delta / (1.0 - delta),
    };
    (lhs - s).abs()
}
