//! Planar domains, boundary arc sets, smoothing collars and their slices.

mod arcs;
pub mod collar;
mod domain;
mod slice;

use serde::{Deserialize, Serialize};

pub use arcs::{Arc, BoundaryArcSet};
pub use collar::{Frame, Remainder, RhoModel, SmoothedCollar};
pub use domain::{BoundaryPoint, DomainDescriptor, PlanarDomain, N_CHECK};
pub use slice::{distance_equivalence_constant, Slice};

use crate::error::Result;
use crate::C64;

/// Tolerance for classifying points as lying on a boundary curve.
pub const ON_BOUNDARY_TOL: f64 = 1e-9;

/// Plural set of a factor: open boundary arcs (boundary case) or a closed
/// interior region (interior case).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PluralSet {
    Arcs { arcs: BoundaryArcSet },
    Interior { region: PlanarDomain },
}

impl PluralSet {
    pub fn arcs(arcs: BoundaryArcSet) -> Self {
        PluralSet::Arcs { arcs }
    }

    pub fn interior(region: PlanarDomain) -> Self {
        PluralSet::Interior { region }
    }

    /// Membership of `z` in the plural set of a factor with domain `domain`.
    pub fn contains(&self, domain: &PlanarDomain, z: C64) -> bool {
        match self {
            PluralSet::Arcs { arcs } => {
                let b = domain.boundary_point(z);
                b.dist <= ON_BOUNDARY_TOL && arcs.contains(b.t)
            }
            PluralSet::Interior { region } => region.signed_distance(z) >= -ON_BOUNDARY_TOL,
        }
    }
}

/// The planar smoothing-collar pipeline: collar from a model, then a slice.
pub fn smoothed_collar(rho: RhoModel, frame: Frame, epsilon: f64) -> Result<SmoothedCollar> {
    SmoothedCollar::new(rho, frame, epsilon)
}

pub fn slice_domain(collar: &SmoothedCollar, q: C64) -> Result<Slice> {
    Slice::new(collar, q)
}

pub fn make_disk(center: C64, radius: f64) -> Result<PlanarDomain> {
    PlanarDomain::make_disk(center, radius)
}

pub fn make_smooth_domain(coeffs: Vec<[f64; 4]>) -> Result<PlanarDomain> {
    PlanarDomain::make_smooth_domain(coeffs)
}

pub fn tangent_ball_radius(domain: &PlanarDomain) -> f64 {
    domain.tangent_ball_radius()
}
