//! Crosses `X = ∪_j A_1 × … × (D_j ∪ A_j) × … × A_N`, the additive functional
//! `ω(z) = Σ ω(z_j, A_j, D_j)` and the envelope `{ω < 1}`.

mod bounds;
mod connect;

pub use bounds::{
    gluing_cap, gluing_delta, gluing_residual, gonchar_bound_check, sup_on_cross, sup_on_plural, sup_over_product, two_constant_bound, BoundReport, BoundRow,
    SupCurve, SUP_SAMPLES,
};
pub(crate) use bounds::gluing_root;
pub use connect::{envelope_connected, Connectivity, MAX_CONNECT_RESOLUTION};
pub use crate::pshmeasure::MeasureMethod;

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain, PluralSet};
use crate::grid::MeasureGrid;
use crate::harmonic::harmonic_measure_disk;
use crate::pshmeasure::{boundary_measure, concentric_extremal, relative_extremal_interior, InteriorSet};
use crate::C64;

/// Default grid resolution of factor measures.
pub const DEFAULT_FACTOR_RESOLUTION: usize = 256;

fn default_resolution() -> usize {
    DEFAULT_FACTOR_RESOLUTION
}

/// Serialized form of a factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorManifest {
    pub domain: PlanarDomain,
    pub plural: PluralSet,
    pub method: MeasureMethod,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

/// One factor `(D_j, A_j)` with its measure `ω(·, A_j, D_j)`.
#[derive(Clone, Debug)]
pub struct FactorSpec {
    pub domain: PlanarDomain,
    pub plural: PluralSet,
    pub method: MeasureMethod,
    pub resolution: usize,
    grid: Option<Arc<MeasureGrid>>,
}

/// Position of a coordinate relative to its factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Plural,
    Outside,
}

impl FactorSpec {
    /// Prepares the factor measure. Closed forms exist for arcs on disks and
    /// for a disk concentric with a disk domain; other methods solve on a
    /// grid once.
    pub fn new(domain: PlanarDomain, plural: PluralSet, method: MeasureMethod, resolution: usize) -> Result<Self> {
        let grid = match (&plural, method) {
            (PluralSet::Arcs { arcs }, MeasureMethod::ClosedForm) => {
                if arcs.is_empty() {
                    return Err(Error::Empty("plural arc set".into()));
                }
                if domain.as_disk().is_none() {
                    return Err(Error::invalid("closed-form factor measure needs a disk domain"));
                }
                None
            }
            (PluralSet::Interior { region }, MeasureMethod::ClosedForm) => {
                concentric(&domain, region)?;
                None
            }
            (PluralSet::Arcs { arcs }, _) => {
                if arcs.is_empty() {
                    return Err(Error::Empty("plural arc set".into()));
                }
                Some(Arc::new(boundary_measure(&domain, arcs, method, resolution)?))
            }
            (PluralSet::Interior { region }, MeasureMethod::Grid) => {
                Some(Arc::new(relative_extremal_interior(&domain, &InteriorSet::Region(region.clone()), resolution)?))
            }
            (PluralSet::Interior { .. }, MeasureMethod::Wos { .. }) => {
                return Err(Error::invalid("walk on spheres supports boundary plural sets only"));
            }
        };
        Ok(FactorSpec { domain, plural, method, resolution, grid })
    }

    /// Factor whose grid measure was computed elsewhere, e.g. loaded from a
    /// cache. The grid must come from the grid or walk-on-spheres method at
    /// the factor's resolution.
    pub fn with_grid(m: FactorManifest, grid: MeasureGrid) -> Result<Self> {
        if m.method == MeasureMethod::ClosedForm {
            return Err(Error::invalid("closed-form factors carry no grid"));
        }
        if grid.resolution() != m.resolution {
            return Err(Error::invalid(format!(
                "grid resolution {} does not match the factor resolution {}",
                grid.resolution(),
                m.resolution
            )));
        }
        Ok(FactorSpec { domain: m.domain, plural: m.plural, method: m.method, resolution: m.resolution, grid: Some(Arc::new(grid)) })
    }

    pub fn from_manifest(m: FactorManifest) -> Result<Self> {
        Self::new(m.domain, m.plural, m.method, m.resolution)
    }

    pub fn manifest(&self) -> FactorManifest {
        FactorManifest {
            domain: self.domain.clone(),
            plural: self.plural.clone(),
            method: self.method,
            resolution: self.resolution,
        }
    }

    /// Unit disk with boundary arcs and the closed-form measure.
    pub fn disk_arcs(arcs: BoundaryArcSet) -> Result<Self> {
        Self::new(PlanarDomain::unit_disk(), PluralSet::arcs(arcs), MeasureMethod::ClosedForm, DEFAULT_FACTOR_RESOLUTION)
    }

    /// Unit disk with the closed concentric disk of radius `r` as plural set.
    pub fn disk_concentric(r: f64) -> Result<Self> {
        let region = PlanarDomain::make_disk(C64::new(0.0, 0.0), r)?;
        Self::new(PlanarDomain::unit_disk(), PluralSet::interior(region), MeasureMethod::ClosedForm, DEFAULT_FACTOR_RESOLUTION)
    }

    pub fn grid(&self) -> Option<&MeasureGrid> {
        self.grid.as_deref()
    }

    pub fn location(&self, z: C64) -> Location {
        if self.plural.contains(&self.domain, z) {
            Location::Plural
        } else if self.domain.contains(z) {
            Location::Interior
        } else {
            Location::Outside
        }
    }

    /// `ω(z, A_j, D_j)`; 0 on the plural set.
    pub fn omega(&self, z: C64) -> Result<f64> {
        match self.location(z) {
            Location::Plural => Ok(0.0),
            Location::Outside => Err(Error::not_admissible(z, "coordinate lies outside D_j ∪ A_j")),
            Location::Interior => self.omega_interior(z),
        }
    }

    fn omega_interior(&self, z: C64) -> Result<f64> {
        if let Some(g) = &self.grid {
            return g
                .value_at(z)
                .map(|v| v.clamp(0.0, 1.0))
                .ok_or_else(|| Error::not_admissible(z, "coordinate lies outside the measure grid"));
        }
        match &self.plural {
            PluralSet::Arcs { arcs } => harmonic_measure_disk(z, &self.domain, arcs),
            PluralSet::Interior { region } => {
                let (c, big, small) = concentric(&self.domain, region)?;
                Ok(concentric_extremal((z - c) / big, small / big))
            }
        }
    }

    /// Whether the plural set lies on the boundary.
    pub fn is_boundary_case(&self) -> bool {
        matches!(self.plural, PluralSet::Arcs { .. })
    }
}

fn concentric(domain: &PlanarDomain, region: &PlanarDomain) -> Result<(C64, f64, f64)> {
    match (domain.as_disk(), region.as_disk()) {
        (Some((c, big)), Some((c2, small))) if (c - c2).norm() <= 1e-14 * big && small < big => Ok((c, big, small)),
        _ => Err(Error::invalid("closed-form interior measure needs concentric disks")),
    }
}

/// Serialized form of a cross.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossManifest {
    pub factors: Vec<FactorManifest>,
}

/// An `N`-fold cross, `N ≥ 2`.
#[derive(Clone, Debug)]
pub struct CrossSpec {
    pub factors: Vec<FactorSpec>,
}

/// A point of `ℂ^N` tagged per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossPoint {
    pub coords: Vec<C64>,
    pub tags: Vec<Location>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMembership {
    /// All coordinates interior and `ω < 1`.
    Interior,
    /// `ω < 1` with at least one plural-set coordinate.
    BoundaryPart,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMembership {
    /// In `X° = ∪_j A_1 × … × D_j × … × A_N`.
    Open,
    /// In `X ∖ X°`.
    Closed,
    Outside,
}

impl CrossSpec {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::invalid(format!("a cross needs at least 2 factors, got {}", factors.len())));
        }
        Ok(CrossSpec { factors })
    }

    pub fn from_manifest(m: CrossManifest) -> Result<Self> {
        Self::new(m.factors.into_iter().map(FactorSpec::from_manifest).collect::<Result<_>>()?)
    }

    pub fn manifest(&self) -> CrossManifest {
        CrossManifest { factors: self.factors.iter().map(FactorSpec::manifest).collect() }
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn point(&self, coords: &[C64]) -> Result<CrossPoint> {
        if coords.len() != self.n() {
            return Err(Error::invalid(format!("point has {} coordinates, cross has {}", coords.len(), self.n())));
        }
        let tags = self.factors.iter().zip(coords).map(|(f, z)| f.location(*z)).collect();
        Ok(CrossPoint { coords: coords.to_vec(), tags })
    }
}

/// `Σ_j ω(z_j, A_j, D_j)`.
pub fn omega_sum(spec: &CrossSpec, point: &CrossPoint) -> Result<f64> {
    check_point(spec, point)?;
    let mut s = 0.0;
    for (f, z) in spec.factors.iter().zip(&point.coords) {
        s += f.omega(*z)?;
    }
    Ok(s)
}

fn check_point(spec: &CrossSpec, point: &CrossPoint) -> Result<()> {
    if point.coords.len() != spec.n() || point.tags.len() != spec.n() {
        return Err(Error::invalid("point dimension does not match the cross"));
    }
    Ok(())
}

pub fn envelope_membership(spec: &CrossSpec, point: &CrossPoint) -> Result<EnvelopeMembership> {
    let w = omega_sum(spec, point)?;
    Ok(if w >= 1.0 {
        EnvelopeMembership::Outside
    } else if point.tags.contains(&Location::Plural) {
        EnvelopeMembership::BoundaryPart
    } else {
        EnvelopeMembership::Interior
    })
}

pub fn cross_membership(spec: &CrossSpec, point: &CrossPoint) -> Result<CrossMembership> {
    check_point(spec, point)?;
    let in_plural: Vec<bool> = point.tags.iter().map(|t| *t == Location::Plural).collect();
    let in_open: Vec<bool> = spec.factors.iter().zip(&point.coords).map(|(f, z)| f.domain.contains(*z)).collect();
    let others_plural = |j: usize| in_plural.iter().enumerate().all(|(k, p)| k == j || *p);
    if (0..spec.n()).any(|j| in_open[j] && others_plural(j)) {
        return Ok(CrossMembership::Open);
    }
    if (0..spec.n()).any(|j| (in_open[j] || in_plural[j]) && others_plural(j)) {
        return Ok(CrossMembership::Closed);
    }
    Ok(CrossMembership::Outside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disks(len: f64) -> CrossSpec {
        let a = BoundaryArcSet::new(&[(0.0, len)]).unwrap();
        CrossSpec::new(vec![FactorSpec::disk_arcs(a.clone()).unwrap(), FactorSpec::disk_arcs(a).unwrap()]).unwrap()
    }

    fn origin(spec: &CrossSpec) -> CrossPoint {
        spec.point(&[C64::new(0.0, 0.0); 2]).unwrap()
    }

    #[test]
    fn omega_sum_at_the_origin() {
        let half = disks(PI);
        assert!((omega_sum(&half, &origin(&half)).unwrap() - 1.0).abs() < 1e-10);
        let big = disks(1.5 * PI);
        assert!((omega_sum(&big, &origin(&big)).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn plural_points_contribute_zero() {
        let spec = disks(PI);
        let p = spec.point(&[C64::from_polar(1.0, 1.0), C64::from_polar(1.0, 2.0)]).unwrap();
        assert_eq!(p.tags, vec![Location::Plural, Location::Plural]);
        assert_eq!(omega_sum(&spec, &p).unwrap(), 0.0);
        assert_eq!(envelope_membership(&spec, &p).unwrap(), EnvelopeMembership::BoundaryPart);
        assert_eq!(cross_membership(&spec, &p).unwrap(), CrossMembership::Closed);
    }

    #[test]
    fn envelope_cases() {
        let half = disks(PI);
        assert_eq!(envelope_membership(&half, &origin(&half)).unwrap(), EnvelopeMembership::Outside);
        let big = disks(1.5 * PI);
        assert_eq!(envelope_membership(&big, &origin(&big)).unwrap(), EnvelopeMembership::Interior);
        let out = big.point(&[C64::new(2.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert!(omega_sum(&big, &out).is_err());
        let off_arc = big.point(&[C64::from_polar(1.0, -0.2), C64::new(0.0, 0.0)]).unwrap();
        assert_eq!(off_arc.tags[0], Location::Outside);
        assert!(envelope_membership(&big, &off_arc).is_err());
    }

    #[test]
    fn cross_membership_cases() {
        let spec = disks(PI);
        let a = C64::from_polar(1.0, 1.0);
        let z = C64::new(0.1, 0.2);
        let p = |u: C64, v: C64| spec.point(&[u, v]).unwrap();
        assert_eq!(cross_membership(&spec, &p(z, a)).unwrap(), CrossMembership::Open);
        assert_eq!(cross_membership(&spec, &p(a, z)).unwrap(), CrossMembership::Open);
        assert_eq!(cross_membership(&spec, &p(z, z)).unwrap(), CrossMembership::Outside);
        assert_eq!(cross_membership(&spec, &p(C64::new(3.0, 0.0), a)).unwrap(), CrossMembership::Outside);
    }

    #[test]
    fn omega_sum_is_symmetric_under_factor_swap() {
        let f1 = FactorSpec::disk_arcs(BoundaryArcSet::upper_half()).unwrap();
        let f2 = FactorSpec::disk_concentric(0.5).unwrap();
        let s12 = CrossSpec::new(vec![f1.clone(), f2.clone()]).unwrap();
        let s21 = CrossSpec::new(vec![f2, f1]).unwrap();
        let (z, w) = (C64::new(0.3, -0.2), C64::new(-0.1, 0.7));
        let a = omega_sum(&s12, &s12.point(&[z, w]).unwrap()).unwrap();
        let b = omega_sum(&s21, &s21.point(&[w, z]).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn concentric_factor_is_zero_on_the_subdisk() {
        let f = FactorSpec::disk_concentric(0.5).unwrap();
        assert_eq!(f.location(C64::new(0.2, 0.0)), Location::Plural);
        assert_eq!(f.omega(C64::new(0.2, 0.0)).unwrap(), 0.0);
        assert!((f.omega(C64::new(0.5f64.sqrt(), 0.0)).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn grid_factor_tracks_closed_form() {
        let a = BoundaryArcSet::new(&[(0.0, 1.5 * PI)]).unwrap();
        let g = FactorSpec::new(PlanarDomain::unit_disk(), PluralSet::arcs(a.clone()), MeasureMethod::Grid, 128).unwrap();
        let c = FactorSpec::disk_arcs(a).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(0.3, 0.4), C64::new(-0.6, 0.1)] {
            assert!((g.omega(z).unwrap() - c.omega(z).unwrap()).abs() < 1e-2);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let spec = CrossSpec::new(vec![
            FactorSpec::disk_arcs(BoundaryArcSet::upper_half()).unwrap(),
            FactorSpec::disk_concentric(0.5).unwrap(),
        ])
        .unwrap();
        let json = serde_json::to_string(&spec.manifest()).unwrap();
        let back = CrossSpec::from_manifest(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.manifest(), spec.manifest());
        assert!(CrossSpec::new(vec![FactorSpec::disk_concentric(0.5).unwrap()]).is_err());
    }
}
