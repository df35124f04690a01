//! Relative extremal functions of planar sets: interior sets, boundary arcs,
//! exhaustions, tubes and sublevel domains.

mod exhaustion;
mod sublevel;
mod tube;

pub use exhaustion::{measure_via_exhaustion, Exhaustion, ExhaustionLimit, ExhaustionStep, Region, Stabilization};
pub(crate) use sublevel::solve_on_sublevel;
pub use sublevel::{rescale_identity_residual, sublevel_domain, SublevelDomain};
pub use tube::{tube_set, SandwichReport, TubeSet, TUBE_SHRINK};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain, SmoothedCollar};
use crate::grid::{assemble, solve_dirichlet, CurveCrossings, DomainGrid, GridMask, Lattice, Link, MeasureGrid};
use crate::harmonic::{
    check_resolution, harmonic_measure_disk, harmonic_measure_grid, harmonic_measure_wos, WosConfig, GRID_TOL,
};
use crate::C64;

/// Interior plural set of a planar domain.
#[derive(Clone, Debug, PartialEq)]
pub enum InteriorSet {
    /// A closed region bounded by a smooth curve; its boundary enters the
    /// stencil with exact crossing fractions.
    Region(PlanarDomain),
    /// Cells of a mask on the lattice `Lattice::covering(domain.bbox(), n)`.
    Mask(GridMask),
}

/// Relative extremal function of an interior set: 0 on the set, 1 on `∂D`,
/// harmonic in between.
pub fn relative_extremal_interior(domain: &PlanarDomain, subset: &InteriorSet, resolution: usize) -> Result<MeasureGrid> {
    check_resolution(resolution)?;
    let lattice = Lattice::covering(domain.bbox(), resolution);
    let mut dg = DomainGrid::with_lattice(domain, lattice);
    dg.crossings.set_constant(1.0);
    let mut fixed = vec![f64::NAN; lattice.len()];
    let mut extra = Vec::new();
    match subset {
        InteriorSet::Region(region) => {
            let outside_domain = region
                .sample_boundary(512)
                .iter()
                .any(|&(_, p)| domain.signed_distance(p) < -crate::geometry::ON_BOUNDARY_TOL);
            if outside_domain {
                return Err(Error::Geometry("interior set leaves the domain".into()));
            }
            let mut inner = CurveCrossings::compute(&lattice, region);
            inner.set_constant(0.0);
            for (k, m) in inner.inside_mask(&lattice).into_iter().enumerate() {
                if m && dg.inside[k] {
                    fixed[k] = 0.0;
                }
            }
            extra.push(inner);
        }
        InteriorSet::Mask(mask) => {
            if mask.lattice != lattice {
                return Err(Error::invalid("mask lattice does not match the domain lattice"));
            }
            for (k, &m) in mask.cells.iter().enumerate() {
                if m && dg.inside[k] {
                    fixed[k] = 0.0;
                }
            }
        }
    }
    if !fixed.iter().any(|v| *v == 0.0) {
        return Err(Error::Empty("interior set covers no grid cell".into()));
    }
    let extra_refs: Vec<&CurveCrossings> = extra.iter().collect();
    solve_masked(&dg, &dg.inside, &fixed, &extra_refs, |_, _| Link::Boundary { theta: 1.0, value: 1.0 }, 1.0)
}

pub(crate) fn solve_masked(
    dg: &DomainGrid,
    active: &[bool],
    fixed: &[f64],
    extra: &[&CurveCrossings],
    cut: impl FnMut(usize, usize) -> Link,
    init: f64,
) -> Result<MeasureGrid> {
    let p = assemble(dg, active, fixed, extra, cut, init);
    let (values, _) = solve_dirichlet(p, GRID_TOL)?;
    Ok(MeasureGrid::from_values(dg.lattice, values))
}

/// `log(|z|/r)/log(1/r)`, the extremal function of the closed disk of radius
/// `r` relative to the unit disk; 0 inside the small disk.
pub fn concentric_extremal(z: C64, r: f64) -> f64 {
    (z.norm() / r).ln().max(0.0) / (1.0 / r).ln()
}

/// How a boundary measure is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Poisson integral; disks only.
    ClosedForm,
    Grid,
    Wos { config: WosConfig },
}

/// `ω(·, A, D)` on the lattice covering `D`.
///
/// With WoS every cell gets its own estimate with seed `config.seed + cell`.
pub fn boundary_measure(
    domain: &PlanarDomain,
    arcs: &BoundaryArcSet,
    method: MeasureMethod,
    resolution: usize,
) -> Result<MeasureGrid> {
    check_resolution(resolution)?;
    if method == MeasureMethod::Grid {
        return harmonic_measure_grid(domain, arcs, resolution);
    }
    if method == MeasureMethod::ClosedForm && domain.as_disk().is_none() {
        return Err(Error::invalid("closed-form measure needs a disk domain"));
    }
    let dg = DomainGrid::new(domain, resolution);
    let lattice = dg.lattice;
    let values: Vec<f64> = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            if !dg.inside[k] {
                return Ok(f64::NAN);
            }
            let z = lattice.node_at(k);
            match method {
                MeasureMethod::ClosedForm => harmonic_measure_disk(z, domain, arcs),
                MeasureMethod::Wos { config } => {
                    let cfg = WosConfig { seed: config.seed.wrapping_add(k as u64), ..config };
                    harmonic_measure_wos(z, domain, arcs, &cfg).map(|e| e.value)
                }
                MeasureMethod::Grid => unreachable!(),
            }
        })
        .collect::<Result<_>>()?;
    Ok(MeasureGrid::from_values(lattice, values))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    /// Largest sampled `ω(z)/dist(z, K)`.
    pub constant: f64,
    /// Set when `K` is not compactly contained in `A`; the constant then
    /// grows without bound under refinement.
    pub degenerate: bool,
}

/// Least `C` with `ω(z) ≤ C·dist(z, K)` over all inside cells of `measure`.
pub fn lipschitz_boundary_bound(
    domain: &PlanarDomain,
    measure: &MeasureGrid,
    arcs: &BoundaryArcSet,
    k: &BoundaryArcSet,
) -> Result<LipschitzBound> {
    if k.is_empty() {
        return Err(Error::Empty("sub-arc set".into()));
    }
    let cells: Vec<(C64, f64)> = measure.iter_inside().map(|(_, z, v)| (z, v)).collect();
    let constant = cells
        .par_iter()
        .map(|&(z, v)| {
            let d = domain.distance_to_arcs(z, k);
            if d > 0.0 {
                v / d
            } else if v > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(LipschitzBound { constant, degenerate: !k.is_compactly_contained_in(arcs, 1e-9) })
}

/// Values of `ω` along the inward normal at boundary parameter `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalProfile {
    pub depths: Vec<f64>,
    pub values: Vec<f64>,
    /// `max ω(t)/t` over the depths.
    pub constant: f64,
}

/// Samples `ω(γ(t) + s·n(t))` at the given depths `s`: closed form on disks,
/// bilinear grid interpolation otherwise.
pub fn normal_profile(
    domain: &PlanarDomain,
    arcs: &BoundaryArcSet,
    t: f64,
    depths: &[f64],
    grid: Option<&MeasureGrid>,
) -> Result<NormalProfile> {
    let p = domain.point(t);
    let n = domain.inward_normal(t);
    let mut values = Vec::with_capacity(depths.len());
    for &s in depths {
        if !(s > 0.0) {
            return Err(Error::invalid("depths must be positive"));
        }
        let z = p + n * s;
        let v = if domain.as_disk().is_some() {
            harmonic_measure_disk(z, domain, arcs)?
        } else {
            let g = grid.ok_or_else(|| Error::invalid("non-disk profile needs a measure grid"))?;
            g.value_at(z).ok_or_else(|| Error::not_admissible(z, "depth leaves the grid domain"))?
        };
        values.push(v);
    }
    let constant = depths.iter().zip(&values).map(|(s, v)| v / s).fold(0.0, f64::max);
    Ok(NormalProfile { depths: depths.to_vec(), values, constant })
}

/// Resolution of the slice solve when the slice is not a disk.
pub const SLICE_RESOLUTION: usize = 256;

/// Upper bound for the ambient measure at `point` by the planar measure
/// `ω(z1, A ∩ ∂V_Q, V_Q)` on the slice through the point, where
/// `A = ∂D ∩ B(P, patch)` around the collar's base point.
pub fn slice_upper_bound(point: [C64; 2], collar: &SmoothedCollar, patch: f64) -> Result<f64> {
    let local = collar.frame.to_local(point);
    let slice = crate::geometry::slice_domain(collar, local[1])?;
    let z = local[0];
    if !slice.domain.contains(z) {
        return Err(Error::not_admissible(z, "point lies outside its slice"));
    }
    let trace = if patch == 2.0 * collar.epsilon { slice.arc_trace.clone() } else { slice.trace(collar, patch)? };
    if slice.domain.as_disk().is_some() {
        return harmonic_measure_disk(z, &slice.domain, &trace);
    }
    let g = harmonic_measure_grid(&slice.domain, &trace, SLICE_RESOLUTION)?;
    g.value_at(z).ok_or_else(|| Error::not_admissible(z, "point lies outside the slice grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Frame, RhoModel};
    use std::f64::consts::PI;

    #[test]
    fn concentric_disk_extremal() {
        let d = PlanarDomain::unit_disk();
        let inner = PlanarDomain::make_disk(C64::new(0.0, 0.0), 0.5).unwrap();
        let g = relative_extremal_interior(&d, &InteriorSet::Region(inner), 128).unwrap();
        let v = g.value_at(C64::new(0.5f64.sqrt(), 0.0)).unwrap();
        assert!((v - 0.5).abs() < 5e-3, "{v}");
        let mut worst: f64 = 0.0;
        for (_, z, v) in g.iter_inside() {
            worst = worst.max((v - concentric_extremal(z, 0.5)).abs());
            if z.norm() < 0.5 {
                assert_eq!(v, 0.0);
            }
        }
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn subset_equal_to_domain_gives_zero() {
        let d = PlanarDomain::unit_disk();
        let g = relative_extremal_interior(&d, &InteriorSet::Region(d.clone()), 64).unwrap();
        assert!(g.iter_inside().all(|(_, _, v)| v == 0.0));
    }

    #[test]
    fn empty_and_escaping_subsets_are_rejected() {
        let d = PlanarDomain::unit_disk();
        let lattice = Lattice::covering(d.bbox(), 64);
        let mask = GridMask { lattice, cells: vec![false; lattice.len()] };
        assert!(matches!(relative_extremal_interior(&d, &InteriorSet::Mask(mask), 64), Err(Error::Empty(_))));
        let big = PlanarDomain::make_disk(C64::new(0.5, 0.0), 0.8).unwrap();
        assert!(relative_extremal_interior(&d, &InteriorSet::Region(big), 64).is_err());
    }

    #[test]
    fn mask_subset_is_zero_on_its_cells() {
        let d = PlanarDomain::unit_disk();
        let lattice = Lattice::covering(d.bbox(), 64);
        let cells: Vec<bool> = (0..lattice.len()).map(|k| lattice.node_at(k).norm() < 0.3).collect();
        let g = relative_extremal_interior(&d, &InteriorSet::Mask(GridMask { lattice, cells: cells.clone() }), 64)
            .unwrap();
        for (k, _, v) in g.iter_inside() {
            if cells[k] {
                assert_eq!(v, 0.0);
            }
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn closed_form_and_grid_methods_agree() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::new(&[(0.0, 1.5 * PI)]).unwrap();
        let cf = boundary_measure(&d, &a, MeasureMethod::ClosedForm, 96).unwrap();
        let gr = boundary_measure(&d, &a, MeasureMethod::Grid, 96).unwrap();
        assert_eq!(cf.lattice(), gr.lattice());
        let mut worst: f64 = 0.0;
        for (k, z, v) in cf.iter_inside() {
            if 1.0 - z.norm() > 0.1 {
                worst = worst.max((v - gr.at(k).unwrap()).abs());
            }
        }
        assert!(worst < 1e-2, "{worst}");
        let e = PlanarDomain::ellipse(2.0, 1.0).unwrap();
        assert!(boundary_measure(&e, &a, MeasureMethod::ClosedForm, 64).is_err());
    }

    #[test]
    fn normal_profile_decreases_to_zero() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let depths = [0.1, 0.03, 0.01, 0.003, 0.001];
        let p = normal_profile(&d, &a, 0.5 * PI, &depths, None).unwrap();
        assert!(p.values.windows(2).all(|w| w[1] < w[0]));
        assert!(p.values[4] < 0.05);
        assert!(p.constant.is_finite());
    }

    #[test]
    fn lipschitz_bound_flags_non_compact_subarcs() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let g = boundary_measure(&d, &a, MeasureMethod::ClosedForm, 64).unwrap();
        let k = BoundaryArcSet::new(&[(PI / 3.0, 2.0 * PI / 3.0)]).unwrap();
        let b = lipschitz_boundary_bound(&d, &g, &a, &k).unwrap();
        assert!(!b.degenerate && b.constant.is_finite());
        let p = normal_profile(&d, &a, 0.5 * PI, &[0.05, 0.02, 0.01], None).unwrap();
        for (s, v) in p.depths.iter().zip(&p.values) {
            assert!(*v <= b.constant * s);
        }
        let b2 = lipschitz_boundary_bound(&d, &g, &a, &a).unwrap();
        assert!(b2.degenerate);
        assert!(b2.constant > b.constant);
    }

    #[test]
    fn slice_bound_on_the_ball() {
        let c = SmoothedCollar::new(RhoModel::ball(1.0), Frame::default(), 0.01).unwrap();
        let mut last = 1.0;
        for t in [1e-2, 1e-3, 1e-4] {
            let v = slice_upper_bound([C64::new(-t, 0.0), C64::new(0.0, 0.0)], &c, 0.02).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-2);
        assert!(slice_upper_bound([C64::new(0.5, 0.0), C64::new(0.0, 0.0)], &c, 0.02).is_err());
        assert!(slice_upper_bound([C64::new(-0.1, 0.0), C64::new(0.5, 0.0)], &c, 0.02).is_err());
    }

    #[test]
    fn slice_center_value_is_complement_fraction() {
        let c = SmoothedCollar::new(RhoModel::ball(1.0), Frame::default(), 0.01).unwrap();
        let v = slice_upper_bound([C64::new(-1.0, 0.0), C64::new(0.0, 0.0)], &c, 0.02).unwrap();
        let s = crate::geometry::slice_domain(&c, C64::new(0.0, 0.0)).unwrap();
        assert!((v - (1.0 - s.arc_trace.total_length() / (2.0 * PI))).abs() < 1e-10);
    }
}
