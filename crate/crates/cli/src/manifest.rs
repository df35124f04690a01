//! Versioned experiment manifests.
//!
//! ```json
//! {"version": "1", "kind": "measure", "domain": {...}, "plural": {...}, "resolution": 512}
//! ```

use std::path::{Path, PathBuf};

use crosslab::cross::{CrossManifest, FactorManifest};
use crosslab::extend::ExtendConfig;
use crosslab::{PlanarDomain, SetMeasure, TestFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Experiment {
    Measure(MeasureRun),
    Envelope(EnvelopeRun),
    Basis(BasisRun),
    Extend(ExtendRun),
    Verify(VerifyRun),
    Slice(SliceRun),
    Schedule(ScheduleRun),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Measure(_) => "measure",
            Experiment::Envelope(_) => "envelope",
            Experiment::Basis(_) => "basis",
            Experiment::Extend(_) => "extend",
            Experiment::Verify(_) => "verify",
            Experiment::Slice(_) => "slice",
            Experiment::Schedule(_) => "schedule",
        }
    }
}

/// Measure of one factor on its grid. `resolution` is required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRun {
    pub domain: PlanarDomain,
    pub plural: crosslab::PluralSet,
    #[serde(default = "grid_method")]
    pub method: crosslab::MeasureMethod,
    pub resolution: usize,
    /// Points at which values are reported.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Contour levels of the SVG.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
}

fn grid_method() -> crosslab::MeasureMethod {
    crosslab::MeasureMethod::Grid
}

fn default_levels() -> Vec<f64> {
    (1..10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRun {
    pub cross: CrossManifest,
    /// Per-axis resolution of the connectivity flood fill.
    pub resolution: usize,
    #[serde(default)]
    pub points: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRun {
    pub domain: PlanarDomain,
    pub measure: SetMeasure,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendRun {
    pub cross: CrossManifest,
    pub function: TestFunction,
    pub degree: usize,
    #[serde(default)]
    pub grid: Option<ExtendGrid>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// Sample grid of an extension run; missing fields keep their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendGrid {
    pub z_rings: Option<usize>,
    pub z_angles: Option<usize>,
    pub w_rings: Option<usize>,
    pub w_angles: Option<usize>,
    pub radial_max: Option<f64>,
}

impl ExtendRun {
    pub fn config(&self, tol: Option<f64>) -> ExtendConfig {
        let d = ExtendConfig::default();
        let g = self.grid.clone().unwrap_or_default();
        ExtendConfig {
            degree: self.degree,
            z_rings: g.z_rings.unwrap_or(d.z_rings),
            z_angles: g.z_angles.unwrap_or(d.z_angles),
            w_rings: g.w_rings.unwrap_or(d.w_rings),
            w_angles: g.w_angles.unwrap_or(d.w_angles),
            radial_max: g.radial_max.unwrap_or(d.radial_max),
            tolerance: tol.or(self.tolerance).unwrap_or(d.tolerance),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRun {
    pub cross: CrossManifest,
    pub function: TestFunction,
    pub samples: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    1e-9
}

/// Slice of the collar around a boundary point of a perturbed ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRun {
    pub radius: f64,
    #[serde(default)]
    pub perturbation: f64,
    pub epsilon: f64,
    /// Second local coordinate of the slice.
    pub q: [f64; 2],
    /// Radius of the boundary patch traced on the slice.
    pub patch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRun {
    pub cross: CrossManifest,
    pub points: Vec<Vec<[f64; 2]>>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub n_fold: Option<usize>,
    /// Grid resolution of the consistency check; skipped when absent.
    #[serde(default)]
    pub consistency_resolution: Option<usize>,
}

fn default_c() -> f64 {
    1.0
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let m: RunManifest = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("manifest: {e}")))?;
        if m.version != VERSION {
            return Err(CliError::Validation(format!(
                "manifest version '{}' is not supported (expected '{VERSION}')",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

pub fn factor_points(points: &[Vec<[f64; 2]>]) -> Vec<Vec<num_complex::Complex64>> {
    points.iter().map(|p| p.iter().map(|c| num_complex::Complex64::new(c[0], c[1])).collect()).collect()
}

pub fn factor_manifest(run: &MeasureRun) -> FactorManifest {
    FactorManifest {
        domain: run.domain.clone(),
        plural: run.plural.clone(),
        method: run.method,
        resolution: run.resolution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MEASURE: &str = r#"{"version":"1","kind":"measure",
        "domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
        "plural":{"type":"arcs","arcs":[[0.0,3.141592653589793]]},
        "resolution":64}"#;

    #[test]
    fn parses_measure() {
        let m = RunManifest::parse(MEASURE).unwrap();
        assert_eq!(m.experiment.kind(), "measure");
        let back = RunManifest::parse(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn missing_field_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(MEASURE).unwrap();
        v.as_object_mut().unwrap().remove("resolution");
        let text = v.to_string();
        match RunManifest::parse(&text) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("resolution"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_and_kind_are_checked() {
        assert!(matches!(RunManifest::parse(&MEASURE.replace(r#""1""#, r#""2""#)), Err(CliError::Validation(_))));
        assert!(matches!(
            RunManifest::parse(&MEASURE.replace(r#""measure""#, r#""teleport""#)),
            Err(CliError::Validation(_))
        ));
    }
}
