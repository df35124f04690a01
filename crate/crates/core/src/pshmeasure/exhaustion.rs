use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain, ON_BOUNDARY_TOL};
use crate::grid::{CurveCrossings, DomainGrid, Lattice, Link, MeasureGrid};
use crate::harmonic::{check_resolution, grid_error, harmonic_measure_grid, solve_on};
use crate::C64;

use super::solve_masked;
use super::sublevel::{arc_side_seed, solve_on_sublevel, sublevel_from_cell};

/// Successive limit terms closer than this in sup-norm end the iteration.
pub const EXHAUSTION_TOL: f64 = 1e-4;

/// Subdomain `Ω_k` of an exhaustion of `Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `Ω` itself.
    Whole,
    /// `Ω ∩ P`.
    Intersect { region: PlanarDomain },
    /// Arc-side component of `{ω(·, A, Ω) < 1 − ε}`.
    Sublevel { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionStep {
    pub region: Region,
    pub arcs: BoundaryArcSet,
}

/// Disk `V` on which `V ∩ Ω = V ∩ Ω_step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub center: [f64; 2],
    pub radius: f64,
    pub step: usize,
}

/// Sequence `(Ω_k, A_k)` exhausting `(Ω, A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exhaustion {
    pub domain: PlanarDomain,
    pub arcs: BoundaryArcSet,
    pub steps: Vec<ExhaustionStep>,
    #[serde(default)]
    pub stabilization: Vec<Stabilization>,
}

/// Samples per axis of the containment checks.
const CHECK_GRID: usize = 96;

impl Exhaustion {
    /// Validates the sampled invariants that do not need a solve:
    /// `A_k ⊂ A_{k+1} ⊂ A`, `A_k ⊂ ∂Ω_k`, nesting of intersected regions and
    /// of sublevel thresholds, and the stabilization neighbourhoods.
    pub fn new(
        domain: PlanarDomain,
        arcs: BoundaryArcSet,
        steps: Vec<ExhaustionStep>,
        stabilization: Vec<Stabilization>,
    ) -> Result<Self> {
        let e = Exhaustion { domain, arcs, steps, stabilization };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Empty("exhaustion".into()));
        }
        let lattice = Lattice::covering(self.domain.bbox(), CHECK_GRID);
        let nodes: Vec<C64> = (0..lattice.len())
            .map(|k| lattice.node_at(k))
            .filter(|z| self.domain.contains(*z))
            .collect();
        for (k, step) in self.steps.iter().enumerate() {
            if !step.arcs.is_subset_of(&self.arcs, 1e-12) {
                return Err(Error::Geometry(format!("A_{k} is not contained in A")));
            }
            if k > 0 && !self.steps[k - 1].arcs.is_subset_of(&step.arcs, 1e-12) {
                return Err(Error::Geometry(format!("A_{} is not contained in A_{k}", k - 1)));
            }
            match &step.region {
                Region::Whole => {}
                Region::Intersect { region } => {
                    for a in step.arcs.arcs() {
                        for j in 0..=64 {
                            let p = self.domain.point(a.start + a.len * j as f64 / 64.0);
                            if region.signed_distance(p) < -ON_BOUNDARY_TOL {
                                return Err(Error::Geometry(format!("A_{k} leaves the boundary of Omega_{k}")));
                            }
                        }
                    }
                }
                Region::Sublevel { epsilon } => {
                    if !(*epsilon > 0.0 && *epsilon < 1.0) {
                        return Err(Error::invalid(format!("sublevel epsilon {epsilon} must lie in (0, 1)")));
                    }
                }
            }
            if k > 0 {
                let prev = &self.steps[k - 1].region;
                let nested = match (prev, &step.region) {
                    (_, Region::Whole) => true,
                    (Region::Sublevel { epsilon: a }, Region::Sublevel { epsilon: b }) => b <= a,
                    (Region::Whole, _) => false,
                    (Region::Intersect { region: p }, Region::Intersect { region: q }) => {
                        nodes.iter().all(|z| !p.contains(*z) || q.contains(*z))
                    }
                    // Mixed kinds are checked on the solve lattice.
                    _ => true,
                };
                if !nested {
                    return Err(Error::Geometry(format!("Omega_{} is not contained in Omega_{k}", k - 1)));
                }
            }
        }
        for s in &self.stabilization {
            let step = self
                .steps
                .get(s.step)
                .ok_or_else(|| Error::invalid(format!("stabilization refers to missing step {}", s.step)))?;
            let c = C64::new(s.center[0], s.center[1]);
            let ok = match &step.region {
                Region::Whole => true,
                Region::Intersect { region } => {
                    nodes.iter().filter(|z| (**z - c).norm() < s.radius).all(|z| region.contains(*z))
                }
                Region::Sublevel { .. } => {
                    return Err(Error::invalid("stabilization on sublevel steps is not supported"));
                }
            };
            if !ok {
                return Err(Error::Geometry(format!("V ∩ Omega differs from V ∩ Omega_{} near {c}", s.step)));
            }
        }
        Ok(())
    }
}

/// Result of [`measure_via_exhaustion`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionLimit {
    /// Last computed term, defined on `Ω_k` of the last step used.
    pub grid: MeasureGrid,
    pub steps_used: usize,
    /// Sup-norm changes between successive terms over common cells.
    pub changes: Vec<f64>,
    pub converged: bool,
}

/// `lim ω(·, A_k, Ω_k)` on the lattice of `Ω`, stopping once successive terms
/// differ by less than [`EXHAUSTION_TOL`].
///
/// The sampled invariants are checked by [`Exhaustion::validate`]; here a term
/// rising above its predecessor by more than twice the grid error is reported
/// as [`Error::NonMonotone`].
pub fn measure_via_exhaustion(exhaustion: &Exhaustion, resolution: usize) -> Result<ExhaustionLimit> {
    check_resolution(resolution)?;
    if exhaustion.steps.is_empty() {
        return Err(Error::Empty("exhaustion".into()));
    }
    let domain = &exhaustion.domain;
    let base = DomainGrid::new(domain, resolution);
    let allowed = 2.0 * grid_error(resolution);
    let mut parent: Option<MeasureGrid> = None;
    let mut prev: Option<MeasureGrid> = None;
    let mut changes = Vec::new();
    for (k, step) in exhaustion.steps.iter().enumerate() {
        let grid = match &step.region {
            Region::Whole => {
                let mut dg = base.clone();
                dg.crossings.assign_arc_values(&step.arcs);
                solve_on(&dg, 0.5)?
            }
            Region::Intersect { region } => solve_intersection(domain, &base, region, &step.arcs)?,
            Region::Sublevel { epsilon } => {
                if parent.is_none() {
                    parent = Some(harmonic_measure_grid(domain, &exhaustion.arcs, resolution)?);
                }
                let p = parent.as_ref().unwrap();
                let sub = sublevel_from_cell(p, *epsilon, arc_side_seed(p)?)?;
                solve_on_sublevel(domain, &step.arcs, &sub)?
            }
        };
        if let Some(old) = &prev {
            let mut change: f64 = 0.0;
            for (idx, _, v_old) in old.iter_inside() {
                let Some(v) = grid.at(idx) else {
                    return Err(Error::Geometry(format!("Omega_{} is not contained in Omega_{k}", k - 1)));
                };
                if v - v_old > allowed {
                    return Err(Error::NonMonotone { increase: v - v_old, allowed });
                }
                change = change.max((v - v_old).abs());
            }
            changes.push(change);
            if change < EXHAUSTION_TOL {
                return Ok(ExhaustionLimit { grid, steps_used: k + 1, changes, converged: true });
            }
        }
        prev = Some(grid);
    }
    let steps_used = exhaustion.steps.len();
    Ok(ExhaustionLimit { grid: prev.unwrap(), steps_used, changes, converged: false })
}

/// `ω(·, A_k, Ω ∩ P)`: crossings of `∂P` carry 0 where they lie on `∂Ω` with
/// parameter in `A_k`, else 1.
fn solve_intersection(
    domain: &PlanarDomain,
    base: &DomainGrid,
    region: &PlanarDomain,
    arcs: &BoundaryArcSet,
) -> Result<MeasureGrid> {
    let mut dg = base.clone();
    dg.crossings.assign_arc_values(arcs);
    let mut pc = CurveCrossings::compute(&dg.lattice, region);
    pc.set_values(|t| {
        let b = domain.boundary_point(region.point(t));
        if b.dist < ON_BOUNDARY_TOL && arcs.contains(b.t) {
            0.0
        } else {
            1.0
        }
    });
    let in_p = pc.inside_mask(&dg.lattice);
    let active: Vec<bool> = dg.inside.iter().zip(&in_p).map(|(a, b)| *a && *b).collect();
    let fixed = vec![f64::NAN; active.len()];
    solve_masked(&dg, &active, &fixed, &[&pc], |_, _| Link::Boundary { theta: 1.0, value: 1.0 }, 0.5)
}
