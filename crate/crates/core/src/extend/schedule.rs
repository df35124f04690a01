use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{gluing_cap, gluing_residual, gluing_root, omega_sum, CrossSpec, Location};
use crate::error::{Error, Result};
use crate::geometry::PluralSet;
use crate::harmonic::{grid_error, harmonic_measure_grid};
use crate::pshmeasure::{solve_on_sublevel, sublevel_domain, tube_set};
use crate::C64;

/// Required residual of the gluing equation.
pub const GLUING_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingEntry {
    pub coords: Vec<C64>,
    pub omega_sum: f64,
    pub s: f64,
    pub delta: f64,
    pub residual: f64,
    /// Width parameter of the tube `T_δ` around the first factor's arcs.
    pub tube_delta: f64,
    /// `G_δ = {ω(·, B, G) < threshold}` in the second factor.
    pub sublevel_threshold: f64,
    /// The point lies on the plural sets of all factors (`s = 1`).
    pub boundary_anchored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingSchedule {
    pub c: f64,
    pub n_fold: Option<usize>,
    pub cap: f64,
    pub entries: Vec<GluingEntry>,
}

/// Per-point `δ` solving the gluing equation with `s = 1 − Σω`, with the
/// tube and sublevel parameters derived from it.
///
/// With `n_fold = Some(N)` the `N`-fold equation is used and `c` is ignored.
pub fn gluing_schedule(spec: &CrossSpec, points: &[Vec<C64>], c: f64, n_fold: Option<usize>) -> Result<GluingSchedule> {
    let cap = gluing_cap(c, n_fold);
    let entries = points
        .par_iter()
        .map(|coords| {
            let p = spec.point(coords)?;
            let omega = omega_sum(spec, &p)?;
            if !(omega < 1.0) {
                return Err(Error::not_admissible(coords[0], format!("omega sum {omega} is not below 1")));
            }
            let s = 1.0 - omega;
            let anchored = p.tags.iter().all(|t| *t == Location::Plural);
            let delta = gluing_root(s, c, n_fold)?;
            let residual = gluing_residual(s, c, n_fold, delta);
            if !(delta < cap) || residual > GLUING_RESIDUAL_TOL {
                return Err(Error::NotConverged { iterations: 0, residual });
            }
            let sublevel_threshold = match n_fold {
                Some(n) => 1.0 - n as f64 * delta,
                None => 1.0 - 2.0 * c * delta,
            };
            Ok(GluingEntry {
                coords: coords.clone(),
                omega_sum: omega,
                s,
                delta,
                residual,
                tube_delta: delta,
                sublevel_threshold,
                boundary_anchored: anchored,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GluingSchedule { c, n_fold, cap, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub coords: Vec<C64>,
    pub delta: f64,
    /// `ω(z, T_δ, D)` on the grid.
    pub omega_tube: f64,
    /// `ω(w, B, G_δ)` on the grid.
    pub omega_sublevel: f64,
    /// `1 − δ − (omega_tube + omega_sublevel)`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub resolution: usize,
    pub tolerance: f64,
    pub rows: Vec<ConsistencyRow>,
    /// Entries on a plural set, where the glued sets are not needed.
    pub skipped: usize,
    pub failures: usize,
}

impl GluingSchedule {
    /// Checks `ω(z, T_δ, D) + ω(w, B, G_δ) < 1 − δ` for two-factor crosses
    /// with boundary arcs in both factors, with grid measures at `resolution`
    /// and tolerance twice the grid error.
    pub fn verify_consistency(&self, spec: &CrossSpec, resolution: usize) -> Result<ConsistencyReport> {
        if spec.n() != 2 || self.n_fold.is_some() {
            return Err(Error::invalid("consistency check needs a two-factor schedule"));
        }
        let arcs = |k: usize| match &spec.factors[k].plural {
            PluralSet::Arcs { arcs } => Ok(arcs.clone()),
            PluralSet::Interior { .. } => Err(Error::invalid("consistency check needs boundary arcs in both factors")),
        };
        let (a, b) = (arcs(0)?, arcs(1)?);
        let (d, g) = (&spec.factors[0].domain, &spec.factors[1].domain);
        let wa = harmonic_measure_grid(d, &a, resolution)?;
        let wb = harmonic_measure_grid(g, &b, resolution)?;
        let tolerance = 2.0 * grid_error(resolution);
        let mut rows = Vec::new();
        let mut skipped = 0;
        for e in &self.entries {
            let p = spec.point(&e.coords)?;
            if p.tags.iter().any(|t| *t == Location::Plural) {
                skipped += 1;
                continue;
            }
            let (z, w) = (e.coords[0], e.coords[1]);
            let tube = tube_set(d, &a, e.tube_delta, &wa)?;
            let omega_tube = tube
                .measure(d, &a)?
                .value_at(z)
                .ok_or_else(|| Error::not_admissible(z, "point outside the tube measure grid"))?;
            let sub = sublevel_domain(&wb, 1.0 - e.sublevel_threshold, w)?;
            let omega_sublevel = solve_on_sublevel(g, &b, &sub)?
                .value_at(w)
                .ok_or_else(|| Error::not_admissible(w, "point outside the sublevel domain"))?;
            let margin = 1.0 - e.delta - omega_tube - omega_sublevel;
            rows.push(ConsistencyRow { coords: e.coords.clone(), delta: e.delta, omega_tube, omega_sublevel, margin });
        }
        let failures = rows.iter().filter(|r| r.margin <= -tolerance).count();
        Ok(ConsistencyReport { resolution, tolerance, rows, skipped, failures })
    }

    /// Columns `re_j, im_j, omega_sum, s, delta, residual, threshold, anchored`.
    pub fn to_csv(&self) -> String {
        let n = self.entries.first().map_or(0, |e| e.coords.len());
        let mut s = String::new();
        for j in 1..=n {
            s.push_str(&format!("re_{j},im_{j},"));
        }
        s.push_str("omega_sum,s,delta,residual,threshold,anchored\n");
        for e in &self.entries {
            for z in &e.coords {
                s.push_str(&format!("{},{},", z.re, z.im));
            }
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.omega_sum, e.s, e.delta, e.residual, e.sublevel_threshold, e.boundary_anchored
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::FactorSpec;
    use crate::geometry::BoundaryArcSet;
    use std::f64::consts::PI;

    fn half() -> CrossSpec {
        let b = BoundaryArcSet::upper_half();
        CrossSpec::new(vec![FactorSpec::disk_arcs(b.clone()).unwrap(), FactorSpec::disk_arcs(b).unwrap()]).unwrap()
    }

    #[test]
    fn half_sum_point() {
        // ω = 1/2 + 0 at (0, i), with i on the upper half arc.
        let s = half();
        assert!(gluing_schedule(&s, &[vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)]], 1.0, None).is_err());
        let pt = vec![C64::new(0.0, 0.0), C64::from_polar(1.0, PI / 2.0)];
        let sch = gluing_schedule(&s, &[pt], 1.0, None).unwrap();
        let e = &sch.entries[0];
        assert!((e.omega_sum - 0.5).abs() < 1e-12);
        let oracle = (3.5 - 10.25f64.sqrt()) / 2.0;
        assert!((e.delta - oracle).abs() < 1e-14);
        assert!((e.delta - 0.14922).abs() < 1e-5);
        assert!((e.sublevel_threshold - 0.7016).abs() < 1e-4);
        assert!(!e.boundary_anchored);
    }

    #[test]
    fn anchored_point_and_rejection() {
        let s = half();
        let on_b = C64::from_polar(1.0, PI / 2.0);
        let sch = gluing_schedule(&s, &[vec![on_b, on_b]], 1.0, None).unwrap();
        let e = &sch.entries[0];
        assert!(e.boundary_anchored && e.s == 1.0);
        assert!(e.delta > 0.0 && e.delta < sch.cap);
        let off = C64::from_polar(1.0, -PI / 2.0);
        assert!(gluing_schedule(&s, &[vec![off, C64::new(0.0, 0.0)]], 1.0, None).is_err());
    }

    #[test]
    fn n_fold_threshold() {
        let s = half();
        let pt = vec![C64::new(0.0, 0.5), C64::new(0.0, 0.5)];
        let sch = gluing_schedule(&s, &[pt], 0.0, Some(3)).unwrap();
        let e = &sch.entries[0];
        assert!(e.residual <= GLUING_RESIDUAL_TOL);
        assert!((e.sublevel_threshold - (1.0 - 3.0 * e.delta)).abs() < 1e-15);
        assert!(e.delta < 1.0 / 3.0);
    }

    #[test]
    fn consistency_on_a_coarse_grid() {
        let s = half();
        let pts: Vec<Vec<C64>> = [(0.0, 0.3, 0.0, 0.4), (0.2, 0.5, -0.1, 0.6), (-0.3, 0.2, 0.3, 0.1)]
            .iter()
            .map(|&(a, b, c, d)| vec![C64::new(a, b), C64::new(c, d)])
            .collect();
        let sch = gluing_schedule(&s, &pts, 1.0, None).unwrap();
        let r = sch.verify_consistency(&s, 96).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.failures, 0, "{r:?}");
    }
}
