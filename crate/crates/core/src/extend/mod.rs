//! End-to-end extension experiments: series extension on mixed crosses, the
//! maximum-norm check, bound verification on boundary crosses and gluing
//! schedules.

mod schedule;
mod verify;

pub use schedule::{gluing_schedule, ConsistencyReport, GluingEntry, GluingSchedule};
pub use verify::{sample_envelope, verify_boundary_extension, BoundaryVerification};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::bergman::{build_doubly_orthogonal, coefficients, sum_series, DoublyOrthogonalBasis, SetMeasure};
use crate::error::{Error, Result};
use crate::geometry::{PlanarDomain, PluralSet};
use crate::cross::CrossSpec;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertTag {
    /// Series converged with error estimate within the tolerance.
    SeriesCertified,
    /// In the envelope, but the series error estimate exceeds the tolerance.
    BoundOnly,
    /// The series diverges at the point.
    Uncertified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendConfig {
    pub degree: usize,
    /// Polar sample grid of the `z` factor.
    pub z_rings: usize,
    pub z_angles: usize,
    /// Polar sample grid of the `w` factor, plus samples on the arcs.
    pub w_rings: usize,
    pub w_angles: usize,
    /// Largest radial fraction of the polar grids.
    pub radial_max: f64,
    pub tolerance: f64,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            degree: 40,
            z_rings: 16,
            z_angles: 64,
            w_rings: 10,
            w_angles: 64,
            radial_max: 0.995,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub z: C64,
    pub w: C64,
    pub omega: f64,
    pub value: Option<C64>,
    pub error_bound: f64,
    pub terms: usize,
    pub tag: CertTag,
}

/// Sampled extension `f̂` on the envelope of a mixed cross.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionField {
    pub degree: usize,
    pub tolerance: f64,
    pub nu: Vec<f64>,
    pub points: Vec<FieldPoint>,
}

impl ExtensionField {
    pub fn count(&self, tag: CertTag) -> usize {
        self.points.iter().filter(|p| p.tag == tag).count()
    }

    /// Columns `z_re, z_im, w_re, w_im, omega, re, im, error_bound, terms, tag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z_re,z_im,w_re,w_im,omega,re,im,error_bound,terms,tag\n");
        for p in &self.points {
            let v = p.value.unwrap_or(C64::new(f64::NAN, f64::NAN));
            let tag = match p.tag {
                CertTag::SeriesCertified => "series-certified",
                CertTag::BoundOnly => "bound-only",
                CertTag::Uncertified => "uncertified",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                p.z.re, p.z.im, p.w.re, p.w.im, p.omega, v.re, v.im, p.error_bound, p.terms, tag
            ));
        }
        s
    }
}

/// Points `c + s(γ(t) − c)` of a domain star-shaped about `c`, for
/// `s = radial_max·i/rings`, `i = 1..=rings`, and `t` on a uniform grid; the
/// center is included once.
pub fn polar_samples(domain: &PlanarDomain, rings: usize, angles: usize, radial_max: f64) -> Vec<C64> {
    let c = domain.interior_point();
    let mut pts = vec![c];
    for i in 1..=rings {
        let s = radial_max * i as f64 / rings as f64;
        for j in 0..angles {
            pts.push(c + s * (domain.point(TAU * j as f64 / angles as f64) - c));
        }
    }
    pts
}

/// Series extension on a cross whose first factor has an interior plural
/// set and whose second factor has boundary arcs.
///
/// Coefficients are integrated over the interior set for every `w` sample,
/// including samples on the arcs at the angular grid. Every sampled pair in
/// the envelope is tagged.
pub fn extend_mixed_cross(
    spec: &CrossSpec,
    f: &(dyn Fn(C64, C64) -> C64 + Sync),
    cfg: &ExtendConfig,
) -> Result<ExtensionField> {
    if spec.n() != 2 {
        return Err(Error::invalid("mixed extension needs a two-factor cross"));
    }
    let (fz, fw) = (&spec.factors[0], &spec.factors[1]);
    let region = match &fz.plural {
        PluralSet::Interior { region } => region.clone(),
        _ => return Err(Error::invalid("the first factor must have an interior plural set")),
    };
    let arcs = match &fw.plural {
        PluralSet::Arcs { arcs } => arcs.clone(),
        _ => return Err(Error::invalid("the second factor must have boundary arcs")),
    };
    if !(cfg.radial_max > 0.0 && cfg.radial_max < 1.0) || cfg.z_rings == 0 || cfg.w_rings == 0 {
        return Err(Error::invalid("sample grids need rings >= 1 and radial_max in (0, 1)"));
    }
    let basis = build_doubly_orthogonal(&fz.domain, &SetMeasure::Area { region }, cfg.degree)?;

    let zs = polar_samples(&fz.domain, cfg.z_rings, cfg.z_angles, cfg.radial_max);
    let mut ws = polar_samples(&fw.domain, cfg.w_rings, cfg.w_angles, cfg.radial_max);
    ws.extend(
        (0..cfg.w_angles)
            .map(|j| TAU * j as f64 / cfg.w_angles as f64)
            .filter(|t| arcs.contains(*t))
            .map(|t| fw.domain.point(t)),
    );
    let oz: Vec<f64> = zs.par_iter().map(|z| fz.omega(*z)).collect::<Result<_>>()?;
    let ow: Vec<f64> = ws.par_iter().map(|w| fw.omega(*w)).collect::<Result<_>>()?;
    if !oz.iter().any(|a| ow.iter().any(|b| a + b < 1.0)) {
        return Err(Error::Empty("envelope sample".into()));
    }
    let coeffs = coefficients(&basis, f, &ws)?;
    let bz: Vec<Vec<C64>> = zs.par_iter().map(|z| basis.eval_all(*z)).collect();
    let points: Vec<FieldPoint> = (0..zs.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (zs, ws, oz, ow, bz, coeffs) = (&zs, &ws, &oz, &ow, &bz, &coeffs);
            (0..ws.len()).filter(move |&j| oz[i] + ow[j] < 1.0).map(move |j| {
                let omega = oz[i] + ow[j];
                match sum_series(&bz[i], coeffs, j, zs[i], cfg.degree) {
                    Ok(s) => {
                        let e = s.error_bound();
                        let tag = if e <= cfg.tolerance { CertTag::SeriesCertified } else { CertTag::BoundOnly };
                        FieldPoint { z: zs[i], w: ws[j], omega, value: Some(s.value), error_bound: e, terms: s.terms, tag }
                    }
                    Err(_) => FieldPoint {
                        z: zs[i],
                        w: ws[j],
                        omega,
                        value: None,
                        error_bound: f64::INFINITY,
                        terms: 0,
                        tag: CertTag::Uncertified,
                    },
                }
            })
        })
        .collect();
    Ok(ExtensionField { degree: cfg.degree, tolerance: cfg.tolerance, nu: basis.nu.clone(), points })
}

/// Builds the basis used by [`extend_mixed_cross`] on its own.
pub fn mixed_basis(spec: &CrossSpec, degree: usize) -> Result<DoublyOrthogonalBasis> {
    match &spec.factors.first().map(|f| &f.plural) {
        Some(PluralSet::Interior { region }) => {
            build_doubly_orthogonal(&spec.factors[0].domain, &SetMeasure::Area { region: region.clone() }, degree)
        }
        _ => Err(Error::invalid("the first factor must have an interior plural set")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxNormReport {
    /// Largest `|f̂|` over field points whose error bound is at most
    /// `SUP_ACCURACY·sup_cross`.
    pub sup_field: f64,
    pub sup_cross: f64,
    /// `|sup_field − sup_cross| / sup_cross`.
    pub relative_gap: f64,
    /// Points entering `sup_field`.
    pub sampled: usize,
    /// Certified points with `|f̂| > sup_cross·(1 + MAX_NORM_SLACK)`, plus
    /// other sampled points exceeding it by more than their error bound.
    pub exceeding: usize,
    pub passed: bool,
}

/// Relative tolerance for a field value above `sup_X |f|`.
pub const MAX_NORM_SLACK: f64 = 1e-6;
/// Relative tolerance for the agreement of the two sampled sups.
pub const MAX_NORM_AGREEMENT: f64 = 1e-2;
/// Relative accuracy a series value needs to enter the sampled sup.
pub const SUP_ACCURACY: f64 = 1e-3;

/// Compares the sampled sup of the field with `sup_X |f|`.
///
/// The sup uses every point known to `SUP_ACCURACY`, so bound-only points
/// near the boundary count; the exceedance test holds certified points to
/// `MAX_NORM_SLACK`.
pub fn max_principle_check(field: &ExtensionField, sup_cross: f64) -> MaxNormReport {
    let cap = sup_cross * (1.0 + MAX_NORM_SLACK);
    let (mut sup_field, mut sampled, mut exceeding) = (0.0f64, 0, 0);
    for p in &field.points {
        let Some(v) = p.value else { continue };
        let certified = p.tag == CertTag::SeriesCertified;
        if !certified && !(p.error_bound <= SUP_ACCURACY * sup_cross) {
            continue;
        }
        sampled += 1;
        sup_field = sup_field.max(v.norm());
        let excess = if certified { v.norm() } else { v.norm() - p.error_bound };
        if excess > cap {
            exceeding += 1;
        }
    }
    let relative_gap = (sup_field - sup_cross).abs() / sup_cross;
    MaxNormReport {
        sup_field,
        sup_cross,
        relative_gap,
        sampled,
        exceeding,
        passed: sampled > 0 && exceeding == 0 && relative_gap <= MAX_NORM_AGREEMENT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::{sup_on_cross, FactorSpec};
    use crate::geometry::BoundaryArcSet;
    use std::f64::consts::PI;

    fn mixed() -> CrossSpec {
        let b = BoundaryArcSet::new(&[(0.0, 1.5 * PI)]).unwrap();
        CrossSpec::new(vec![FactorSpec::disk_concentric(0.5).unwrap(), FactorSpec::disk_arcs(b).unwrap()]).unwrap()
    }

    fn small() -> ExtendConfig {
        ExtendConfig { degree: 24, z_rings: 5, z_angles: 16, w_rings: 4, w_angles: 16, ..Default::default() }
    }

    #[test]
    fn polynomial_data_is_reproduced() {
        let field = extend_mixed_cross(&mixed(), &|z, w| z * w, &small()).unwrap();
        assert!(!field.points.is_empty());
        for p in &field.points {
            assert_eq!(p.tag, CertTag::SeriesCertified);
            let e = (p.value.unwrap() - p.z * p.w).norm();
            assert!(e < 1e-10, "{e:e} {p:?}");
        }
    }

    #[test]
    fn pole_function_is_reproduced_on_a_sublevel() {
        let f = |z: C64, w: C64| 1.0 / (2.0 - z * w);
        let field = extend_mixed_cross(&mixed(), &f, &small()).unwrap();
        for p in field.points.iter().filter(|p| p.omega <= 0.8) {
            assert_eq!(p.tag, CertTag::SeriesCertified, "{p:?}");
            assert!((p.value.unwrap() - f(p.z, p.w)).norm() < 1e-6);
        }
    }

    #[test]
    fn nearby_pole_leaves_uncertified_points() {
        let f = |z: C64, w: C64| 1.0 / (1.2 - z * w);
        let field = extend_mixed_cross(&mixed(), &f, &small()).unwrap();
        assert!(field.count(CertTag::Uncertified) + field.count(CertTag::BoundOnly) > 0);
        for p in &field.points {
            if p.tag == CertTag::SeriesCertified {
                assert!((p.value.unwrap() - f(p.z, p.w)).norm() < 1e-6);
            } else {
                assert!((p.z * p.w).norm() > 0.5, "{p:?}");
            }
        }
    }

    #[test]
    fn data_unbounded_on_the_cross_is_rejected() {
        let f = |z: C64, w: C64| 1.0 / (0.5 - z * w);
        let e = extend_mixed_cross(&mixed(), &f, &small());
        assert!(e.is_err(), "{:?}", e.map(|f| f.points.len()));
    }

    #[test]
    fn max_norm_identity_and_negative_control() {
        let f = |z: C64, w: C64| 1.0 / (2.0 - z * w);
        let spec = mixed();
        let field = extend_mixed_cross(&spec, &f, &small()).unwrap();
        let sx = sup_on_cross(&spec, &|p: &[C64]| f(p[0], p[1]).norm(), 2_500);
        assert!((sx - 1.0).abs() < 1e-9);
        let r = max_principle_check(&field, sx);
        assert!(r.passed, "{r:?}");
        let mut bad = field.clone();
        let p = bad.points.iter_mut().find(|p| p.tag == CertTag::SeriesCertified).unwrap();
        p.value = Some(C64::new(1.5, 0.0));
        let r = max_principle_check(&bad, sx);
        assert!(!r.passed && r.exceeding == 1);
    }

    #[test]
    fn constant_data_has_equal_sups() {
        let field = extend_mixed_cross(&mixed(), &|_, _| C64::new(0.0, 3.0), &small()).unwrap();
        let r = max_principle_check(&field, 3.0);
        assert!(r.relative_gap < 1e-12 && r.passed, "{r:?}");
    }

    #[test]
    fn wrong_case_order_is_rejected() {
        let s = mixed();
        let swapped = CrossSpec::new(vec![s.factors[1].clone(), s.factors[0].clone()]).unwrap();
        assert!(extend_mixed_cross(&swapped, &|z, w| z * w, &small()).is_err());
    }
}
