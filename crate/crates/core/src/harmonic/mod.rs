//! Harmonic measure of planar domains relative to boundary arcs.
//!
//! Throughout, `ω(z, A, D)` is the harmonic measure of `∂D ∖ A` at `z`: the
//! harmonic function equal to 0 on `A` and 1 on the rest of the boundary.

mod wos;

pub use wos::{harmonic_measure_wos, MeasureEstimate, WosConfig};

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain};
use crate::grid::{assemble, solve_dirichlet, DomainGrid, Link, MeasureGrid};
use crate::quad::adaptive_gk;
use crate::C64;

/// Absolute tolerance of the disk Poisson integral.
pub const DISK_TOL: f64 = 1e-10;
/// Residual target of the grid relaxation.
pub const GRID_TOL: f64 = 1e-10;
pub const MIN_RESOLUTION: usize = 32;

/// Disk Poisson kernel with respect to `dθ`.
pub fn poisson_kernel(z: C64, theta: f64) -> f64 {
    let (r, phi) = z.to_polar();
    polar_kernel(r, phi, theta)
}

/// `|e^{iθ} − z|²` is written as `(1 − r)² + 4r sin²((θ − φ)/2)` to avoid
/// cancellation near the boundary.
fn polar_kernel(r: f64, phi: f64, theta: f64) -> f64 {
    let s = (0.5 * (theta - phi)).sin();
    let d2 = (1.0 - r) * (1.0 - r) + 4.0 * r * s * s;
    (1.0 - r) * (1.0 + r) / (TAU * d2)
}

/// `ω(z, A, 𝔻)` on the unit disk by adaptive quadrature of the Poisson
/// integral over `∂𝔻 ∖ A`.
pub fn harmonic_measure_disk_arc(z: C64, arcs: &BoundaryArcSet) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::not_admissible(z, "point must lie in the open unit disk"));
    }
    if arcs.is_full() {
        return Ok(0.0);
    }
    if arcs.is_empty() {
        return Ok(1.0);
    }
    let comp = arcs.complement();
    let (r, phi) = z.to_polar();
    if r == 0.0 {
        return Ok(comp.total_length() / TAU);
    }
    // Integrate in u = θ − φ, with every panel shifted so that the nearest
    // kernel peak sits at u = 0 exactly; near the boundary the peak is far
    // narrower than the rounding of θ − φ.
    let mut pieces = Vec::new();
    for a in comp.arcs() {
        let (lo, hi) = (a.start - phi, a.end() - phi);
        let mut cuts = vec![lo];
        let mut k = (lo / TAU).floor() + 1.0;
        while k * TAU < hi {
            cuts.push(k * TAU);
            k += 1.0;
        }
        cuts.push(hi);
        for w in cuts.windows(2) {
            let shift = (0.5 * (w[0] + w[1]) / TAU).round() * TAU;
            pieces.push((w[0] - shift, w[1] - shift));
        }
    }
    let tol = DISK_TOL / pieces.len() as f64;
    let total: f64 = pieces.iter().map(|&(a, b)| adaptive_gk(|u| polar_kernel(r, 0.0, u), a, b, tol).0).sum();
    Ok(total.clamp(0.0, 1.0))
}

/// `ω(z, A, D)` for a disk domain, whose boundary parameter is the polar angle.
pub fn harmonic_measure_disk(z: C64, domain: &PlanarDomain, arcs: &BoundaryArcSet) -> Result<f64> {
    let (c, r) = domain
        .as_disk()
        .ok_or_else(|| Error::invalid("closed-form measure needs a disk domain"))?;
    harmonic_measure_disk_arc((z - c) / r, arcs)
}

/// Discrete harmonic measure on a square lattice with `resolution` nodes per
/// axis covering the domain.
pub fn harmonic_measure_grid(domain: &PlanarDomain, arcs: &BoundaryArcSet, resolution: usize) -> Result<MeasureGrid> {
    check_resolution(resolution)?;
    let mut dg = DomainGrid::new(domain, resolution);
    dg.crossings.assign_arc_values(arcs);
    let init = 1.0 - arcs.total_length() / TAU;
    solve_on(&dg, init)
}

pub(crate) fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::invalid(format!("resolution {resolution} is below {MIN_RESOLUTION}")));
    }
    Ok(())
}

/// Solves the Dirichlet problem on all inside nodes of `dg` with the values
/// already stored in its crossings.
pub(crate) fn solve_on(dg: &DomainGrid, init: f64) -> Result<MeasureGrid> {
    let n = dg.lattice.len();
    let fixed = vec![f64::NAN; n];
    let p = assemble(dg, &dg.inside, &fixed, &[], |_, _| Link::Boundary { theta: 1.0, value: 1.0 }, init);
    let (values, _) = solve_dirichlet(p, GRID_TOL)?;
    Ok(MeasureGrid::from_values(dg.lattice, values))
}

/// Expected sup-norm error of [`harmonic_measure_grid`] away from arc
/// endpoints, as a function of resolution.
pub fn grid_error(resolution: usize) -> f64 {
    2.0 / resolution as f64
}

/// Constant in `P_D(x, y) ≤ C·dist(x, ∂D)/|x − y|²`, with the kernel taken
/// against arclength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBound {
    /// Value used downstream: the analytic constant when known, else the
    /// sampled one.
    pub constant: f64,
    pub sampled: f64,
    pub analytic: Option<f64>,
}

/// Resolution of the Green-function estimate on non-disk domains.
pub const GREEN_RESOLUTION: usize = 128;

pub fn poisson_bound_constant(domain: &PlanarDomain) -> Result<PoissonBound> {
    if let Some((c, r)) = domain.as_disk() {
        let mut sup: f64 = 0.0;
        for k in 0..=40 {
            let rho = r * (1.0 - 10f64.powf(-3.0 * k as f64 / 40.0)).max(0.0);
            for m in 0..16 {
                let x = c + C64::from_polar(rho, TAU * m as f64 / 16.0 + 0.1);
                let dist = r - (x - c).norm();
                for l in 0..64 {
                    let y = c + C64::from_polar(r, TAU * l as f64 / 64.0);
                    let kernel = (r * r - (x - c).norm_sqr()) / (TAU * r * (x - y).norm_sqr());
                    sup = sup.max(kernel * (x - y).norm_sqr() / dist);
                }
            }
        }
        return Ok(PoissonBound { constant: 1.0 / PI, sampled: sup, analytic: Some(1.0 / PI) });
    }
    let sampled = green_poisson_constant(domain, GREEN_RESOLUTION)?;
    Ok(PoissonBound { constant: sampled, sampled, analytic: None })
}

/// Samples `P(x, y)·|x − y|²/dist(x, ∂D)` with the kernel taken as the inward
/// normal derivative of a grid Green function.
fn green_poisson_constant(domain: &PlanarDomain, resolution: usize) -> Result<f64> {
    let base = DomainGrid::new(domain, resolution);
    let h = base.lattice.h;
    let r_t = domain.tangent_ball_radius();
    let mut poles = vec![domain.interior_point()];
    for k in 0..8 {
        let t = TAU * (k as f64 + 0.5) / 8.0;
        poles.push(domain.point(t) + domain.inward_normal(t) * (0.5 * r_t).max(4.0 * h));
    }
    let ys = domain.sample_boundary(128);
    let s = 2.0 * h;
    let mut sup: f64 = 0.0;
    for x in poles {
        let dist_x = domain.boundary_distance(x);
        let singular = |z: C64| -(z - x).norm().ln() / TAU;
        let mut dg = base.clone();
        dg.crossings.set_values(|t| singular(domain.point(t)));
        let g = solve_on(&dg, 0.0)?;
        let green = |z: C64| g.value_at(z).map(|v| singular(z) - v);
        for &(t, y) in &ys {
            let nrm = domain.inward_normal(t);
            if (y - x).norm() < 4.0 * s {
                continue;
            }
            let (Some(g1), Some(g2)) = (green(y + nrm * s), green(y + nrm * (2.0 * s))) else {
                continue;
            };
            let deriv = (4.0 * g1 - g2) / (2.0 * s);
            sup = sup.max(deriv * (x - y).norm_sqr() / dist_x);
        }
    }
    Ok(sup)
}

/// Arclength of `∂D ∖ A`.
pub fn complement_length(domain: &PlanarDomain, arcs: &BoundaryArcSet) -> f64 {
    let comp = arcs.complement();
    if let Some((_, r)) = domain.as_disk() {
        return r * comp.total_length();
    }
    comp.arcs().iter().map(|a| adaptive_gk(|t| domain.speed(t), a.start, a.end(), 1e-12).0).sum()
}

/// Constant `C` for which `ω(z) ≤ C·dist(z, ∂D)/dist(z, ∂D ∖ A)²`: the
/// Poisson constant times the arclength of `∂D ∖ A`.
pub fn certified_arc_constant(domain: &PlanarDomain, arcs: &BoundaryArcSet) -> Result<f64> {
    Ok(poisson_bound_constant(domain)?.constant * complement_length(domain, arcs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcBound {
    pub value: f64,
    /// Set when `z` lies on `∂D ∖ A` and the bound is infinite.
    pub degenerate: bool,
}

/// `C·dist(z, ∂D)/dist(z, ∂D ∖ A)²` for `z` in `D ∪ A`.
pub fn arc_measure_bound(z: C64, domain: &PlanarDomain, arcs: &BoundaryArcSet, c: f64) -> Result<ArcBound> {
    let b = domain.boundary_point(z);
    let on_boundary = b.dist < crate::geometry::ON_BOUNDARY_TOL;
    if !b.inside && !on_boundary {
        return Err(Error::not_admissible(z, "point lies outside the closed domain"));
    }
    let comp = arcs.complement();
    if comp.is_empty() {
        return Ok(ArcBound { value: 0.0, degenerate: false });
    }
    let d_comp = domain.distance_to_arcs(z, &comp);
    if on_boundary && !arcs.contains(b.t) || d_comp <= 0.0 {
        return Ok(ArcBound { value: f64::INFINITY, degenerate: true });
    }
    let d = if on_boundary { 0.0 } else { b.dist };
    Ok(ArcBound { value: c * d / (d_comp * d_comp), degenerate: false })
}
