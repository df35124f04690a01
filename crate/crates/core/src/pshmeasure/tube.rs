use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain};
use crate::grid::{DomainGrid, GridMask, Link, MeasureGrid};

use super::{lipschitz_boundary_bound, solve_masked};

/// Shrink fractions of the inner arc sets `A_1 ⊂ A_2 ⊂ A_3 ⊂ A`.
pub const TUBE_SHRINK: [f64; 3] = [0.25, 0.125, 0.0625];

/// Interior neighbourhood `T_δ = {z : C_k·dist(z, A_k) < δ for some k}` of
/// the arc set, as a mask on the lattice of the measure it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeSet {
    pub delta: f64,
    pub constants: Vec<f64>,
    pub inner_arcs: Vec<BoundaryArcSet>,
    pub mask: GridMask,
    /// Largest `dist(z, A)` over tube cells.
    pub max_arc_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Smallest `ω(·, A, D) − ω(·, T_δ, D)` over inside cells.
    pub min_gap: f64,
    /// Largest such difference.
    pub max_gap: f64,
}

/// Builds `T_δ` from the measure `ω(·, A, D)`.
///
/// `C_k` is the larger of 1 and the largest sampled `ω/dist(·, A_k)`, so
/// `ω < δ` on the tube and every tube cell lies within `δ` of `A`.
pub fn tube_set(domain: &PlanarDomain, arcs: &BoundaryArcSet, delta: f64, measure: &MeasureGrid) -> Result<TubeSet> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    if arcs.is_empty() {
        return Err(Error::Empty("arc set".into()));
    }
    let mut inner_arcs = Vec::new();
    let mut constants = Vec::new();
    for f in TUBE_SHRINK {
        let k = if arcs.is_full() { arcs.clone() } else { arcs.shrink(f)? };
        let c = lipschitz_boundary_bound(domain, measure, arcs, &k)?.constant.max(1.0);
        inner_arcs.push(k);
        constants.push(c);
    }
    let lattice = *measure.lattice();
    let cells: Vec<bool> = (0..lattice.len())
        .into_par_iter()
        .map(|idx| {
            if !measure.is_inside(idx) {
                return false;
            }
            let z = lattice.node_at(idx);
            inner_arcs.iter().zip(&constants).any(|(k, c)| c * domain.distance_to_arcs(z, k) < delta)
        })
        .collect();
    let max_arc_distance = cells
        .par_iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(idx, _)| domain.distance_to_arcs(lattice.node_at(idx), arcs))
        .reduce(|| 0.0, f64::max);
    Ok(TubeSet { delta, constants, inner_arcs, mask: GridMask { lattice, cells }, max_arc_distance })
}

impl TubeSet {
    /// `ω(·, T_δ, D)`: 0 on the tube and on `A`, 1 on `∂D ∖ A`.
    pub fn measure(&self, domain: &PlanarDomain, arcs: &BoundaryArcSet) -> Result<MeasureGrid> {
        let lattice = self.mask.lattice;
        let mut dg = DomainGrid::with_lattice(domain, lattice);
        dg.crossings.assign_arc_values(arcs);
        let fixed: Vec<f64> = self.mask.cells.iter().map(|&m| if m { 0.0 } else { f64::NAN }).collect();
        solve_masked(&dg, &dg.inside, &fixed, &[], |_, _| Link::Boundary { theta: 1.0, value: 1.0 }, 0.5)
    }

    /// Gap `ω(·, A, D) − ω(·, T_δ, D)` between the measure the tube was built
    /// from and the tube measure.
    pub fn sandwich(&self, domain: &PlanarDomain, arcs: &BoundaryArcSet, measure: &MeasureGrid) -> Result<SandwichReport> {
        let tm = self.measure(domain, arcs)?;
        let mut min_gap = f64::INFINITY;
        let mut max_gap = f64::NEG_INFINITY;
        for (k, _, v) in measure.iter_inside() {
            if let Some(t) = tm.at(k) {
                min_gap = min_gap.min(v - t);
                max_gap = max_gap.max(v - t);
            }
        }
        Ok(SandwichReport { min_gap, max_gap })
    }

    pub fn to_csv(&self) -> String {
        self.mask.to_csv()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::harmonic_measure_grid;

    fn setup() -> (PlanarDomain, BoundaryArcSet, MeasureGrid) {
        let d = PlanarDomain::unit_disk();
        let a = BoundaryArcSet::upper_half();
        let g = harmonic_measure_grid(&d, &a, 96).unwrap();
        (d, a, g)
    }

    #[test]
    fn tubes_are_nested_and_close_to_the_arcs() {
        let (d, a, g) = setup();
        let t1 = tube_set(&d, &a, 0.05, &g).unwrap();
        let t2 = tube_set(&d, &a, 0.1, &g).unwrap();
        assert!(t1.mask.count() > 0);
        assert!(t1.mask.cells.iter().zip(&t2.mask.cells).all(|(a, b)| !a || *b));
        assert!(t1.max_arc_distance < 0.05 && t2.max_arc_distance < 0.1);
        assert!(t1.constants.iter().all(|c| *c >= 1.0));
    }

    #[test]
    fn sandwich_holds() {
        let (d, a, g) = setup();
        let t = tube_set(&d, &a, 0.1, &g).unwrap();
        let s = t.sandwich(&d, &a, &g).unwrap();
        assert!(s.min_gap >= -1e-9, "{s:?}");
        assert!(s.max_gap <= 0.1 + 1e-2, "{s:?}");
    }

    #[test]
    fn delta_out_of_range_is_rejected() {
        let (d, a, g) = setup();
        assert!(tube_set(&d, &a, 0.0, &g).is_err());
        assert!(tube_set(&d, &a, 1.0, &g).is_err());
    }

    #[test]
    fn tube_grows_towards_the_collar_as_delta_approaches_one() {
        let (d, a, g) = setup();
        let small = tube_set(&d, &a, 0.2, &g).unwrap().mask.count();
        let large = tube_set(&d, &a, 0.999, &g).unwrap().mask.count();
        assert!(large > small);
    }
}
