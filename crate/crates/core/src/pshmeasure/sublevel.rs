use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain};
use crate::grid::{assemble, component, solve_dirichlet, DomainGrid, GridMask, Link, MeasureGrid};
use crate::harmonic::{check_resolution, harmonic_measure_grid, GRID_TOL};
use crate::C64;

/// Smallest stencil arm admitted at the level curve.
const MIN_THETA: f64 = 1e-8;

/// Connected component of `{ω < 1 − ε}` on the grid of `ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SublevelDomain {
    pub epsilon: f64,
    pub parent: MeasureGrid,
    pub mask: GridMask,
    /// Cell the component was grown from.
    pub seed: usize,
}

impl SublevelDomain {
    pub fn level(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn to_csv(&self) -> String {
        self.mask.to_csv()
    }
}

/// 4-connected component of `{ω < 1 − ε}` containing the cell of `seed_point`.
pub fn sublevel_domain(measure: &MeasureGrid, epsilon: f64, seed_point: C64) -> Result<SublevelDomain> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} must lie in [0, 1)")));
    }
    let lattice = *measure.lattice();
    let seed = lattice
        .nearest(seed_point)
        .ok_or_else(|| Error::not_admissible(seed_point, "seed lies outside the grid"))?;
    sublevel_from_cell(measure, epsilon, seed)
}

pub(crate) fn sublevel_from_cell(measure: &MeasureGrid, epsilon: f64, seed: usize) -> Result<SublevelDomain> {
    let lattice = *measure.lattice();
    let level = 1.0 - epsilon;
    let below: Vec<bool> = measure.raw().iter().map(|v| *v < level).collect();
    if !below[seed] {
        let z = lattice.node_at(seed);
        return Err(Error::not_admissible(
            z,
            format!("seed cell value {:?} is not below 1 - epsilon = {level}", measure.at(seed)),
        ));
    }
    let cells = component(&lattice, &below, seed);
    Ok(SublevelDomain { epsilon, parent: measure.clone(), mask: GridMask { lattice, cells }, seed })
}

/// Seed cell of the component along `A`: the cell of smallest value.
pub(crate) fn arc_side_seed(measure: &MeasureGrid) -> Result<usize> {
    measure
        .iter_inside()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(k, _, _)| k)
        .ok_or_else(|| Error::Empty("measure grid has no inside cells".into()))
}

/// `ω(·, A_k, D_ε)` on the component of `sub`, with 1 on the level curve.
///
/// Along each grid line through a free node the parent values (divided by
/// `1 − ε`) are interpolated by the quadratic through the node and its two
/// stencil arms; an arm that leaves `D_ε` ends where this quadratic reaches 1.
/// Boundary crossings of `∂D` keep their arc values divided by `1 − ε`, which
/// matters only for crossings that straddle an arc endpoint.
pub(crate) fn solve_on_sublevel(
    domain: &PlanarDomain,
    arcs: &BoundaryArcSet,
    sub: &SublevelDomain,
) -> Result<MeasureGrid> {
    let lattice = sub.mask.lattice;
    let mut dg = DomainGrid::with_lattice(domain, lattice);
    dg.crossings.assign_arc_values(arcs);
    let level = sub.level();
    let parent = sub.parent.raw();
    let active = &sub.mask.cells;
    let fixed = vec![f64::NAN; lattice.len()];
    let mut p = assemble(&dg, active, &fixed, &[], |_, nb| Link::Node(nb), 0.5);
    let arm = |l: Link| match l {
        Link::Node(m) => (1.0, parent[m] / level),
        Link::Boundary { theta, value } => (theta, value / level),
    };
    for (k, &node) in p.free.iter().enumerate() {
        let u0 = parent[node] / level;
        for (a, b) in [(0, 1), (2, 3)] {
            let (ta, ua) = arm(p.links[k][a]);
            let (tb, ub) = arm(p.links[k][b]);
            let c2 = ((ua - u0) / ta + (ub - u0) / tb) / (ta + tb);
            let c1 = (ua - u0) / ta - c2 * ta;
            for (d, t, u, sign) in [(a, ta, ua, 1.0), (b, tb, ub, -1.0)] {
                let link = p.links[k][d];
                let leaves = match link {
                    Link::Node(m) => !active[m],
                    Link::Boundary { .. } => u > 1.0,
                };
                p.links[k][d] = if !leaves {
                    match link {
                        Link::Boundary { theta, .. } => Link::Boundary { theta, value: u },
                        node => node,
                    }
                } else {
                    let theta = level_root(c2, sign * c1, u0, t)
                        .unwrap_or_else(|| if u > u0 { ((1.0 - u0) / (u - u0) * t).clamp(MIN_THETA, t) } else { t });
                    Link::Boundary { theta, value: 1.0 }
                };
            }
        }
    }
    let (values, _) = solve_dirichlet(p, GRID_TOL)?;
    Ok(MeasureGrid::from_values(lattice, values))
}

/// Smallest root in `(0, t]` of `c2 x² + c1 x + u0 = 1`.
fn level_root(c2: f64, c1: f64, u0: f64, t: f64) -> Option<f64> {
    let c0 = u0 - 1.0;
    let roots = if c2.abs() < 1e-14 * (c1.abs() + c0.abs()) {
        if c1 == 0.0 {
            return None;
        }
        vec![-c0 / c1]
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let mut r = vec![q / c2];
        if q != 0.0 {
            r.push(c0 / q);
        }
        r
    };
    roots
        .into_iter()
        .filter(|x| *x > 0.0 && *x <= t * (1.0 + 1e-12))
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
        .map(|x| x.clamp(MIN_THETA, t))
}

/// Sup-norm of `ω(·, A, D_ε) − ω(·, A, D)/(1 − ε)` over the arc-side
/// component of `D_ε`.
pub fn rescale_identity_residual(
    domain: &PlanarDomain,
    arcs: &BoundaryArcSet,
    epsilon: f64,
    resolution: usize,
) -> Result<f64> {
    check_resolution(resolution)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} must lie in [0, 1)")));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let parent = harmonic_measure_grid(domain, arcs, resolution)?;
    let sub = sublevel_from_cell(&parent, epsilon, arc_side_seed(&parent)?)?;
    let child = solve_on_sublevel(domain, arcs, &sub)?;
    let scale = 1.0 / (1.0 - epsilon);
    Ok(child
        .iter_inside()
        .map(|(k, _, v)| (v - parent.at(k).unwrap() * scale).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::harmonic_measure_disk_arc;

    #[test]
    fn component_cells_are_strictly_below_level() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let g = harmonic_measure_grid(&d, &a, 64).unwrap();
        let s = sublevel_domain(&g, 0.4, C64::new(0.0, 0.9)).unwrap();
        for (k, &m) in s.mask.cells.iter().enumerate() {
            if m {
                assert!(g.at(k).unwrap() < 0.6);
            }
        }
        // The collar along the arc belongs to the component.
        for t in [0.3, 1.0, 1.5, 2.5] {
            let z = C64::from_polar(0.95, t);
            assert!(s.mask.cells[g.lattice().nearest(z).unwrap()]);
        }
    }

    #[test]
    fn tiny_epsilon_keeps_every_cell() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let g = harmonic_measure_grid(&d, &a, 48).unwrap();
        let s = sublevel_domain(&g, 1e-12, C64::new(0.0, 0.5)).unwrap();
        assert_eq!(s.mask.count(), g.inside_count());
    }

    #[test]
    fn seed_above_level_is_rejected() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let g = harmonic_measure_grid(&d, &a, 64).unwrap();
        let z = C64::new(0.0, -0.45);
        assert!(harmonic_measure_disk_arc(z, &a).unwrap() > 0.65);
        assert!(matches!(sublevel_domain(&g, 0.4, z), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn rescale_residual_is_small_on_a_coarse_grid() {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        assert_eq!(rescale_identity_residual(&d, &a, 0.0, 64).unwrap(), 0.0);
        let r = rescale_identity_residual(&d, &a, 0.3, 128).unwrap();
        assert!(r < 5e-2, "{r}");
    }
}
