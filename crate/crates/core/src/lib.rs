//! Numerical laboratory for harmonic and plurisubharmonic measures of planar
//! domains, envelopes of two-factor crosses, and series extensions of
//! separately holomorphic functions built from doubly orthogonal bases.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: planar domains, boundary arc sets, smoothing collars and slices.
//! - [`harmonic`]: harmonic measure by disk quadrature, walk on spheres and grids.
//! - [`pshmeasure`]: relative extremal functions, exhaustions, tubes, sublevel sets.
//! - [`cross`]: cross specifications, envelope membership and bound checkers.
//! - [`bergman`]: doubly orthogonal bases, coefficient functionals, series.
//! - [`extend`]: end-to-end extension experiments and gluing schedules.

pub mod bergman;
pub mod catalog;
pub mod cross;
pub mod error;
pub mod extend;
pub mod geometry;
pub mod grid;
pub mod harmonic;
pub mod pshmeasure;
pub mod quad;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use geometry::{BoundaryArcSet, PlanarDomain, PluralSet, Slice, SmoothedCollar};
pub use bergman::{CoefficientField, DoublyOrthogonalBasis, SetMeasure};
pub use catalog::TestFunction;
pub use extend::{CertTag, ExtensionField, GluingSchedule};
pub use cross::{BoundReport, CrossPoint, CrossSpec, EnvelopeMembership, FactorSpec, Location, MeasureMethod};
pub use grid::MeasureGrid;
pub use harmonic::{MeasureEstimate, WosConfig};
pub use pshmeasure::{Exhaustion, SublevelDomain, TubeSet};
