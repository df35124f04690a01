//! One function per experiment kind. Each writes its artifacts under the
//! output directory and returns the JSON summary.

use std::path::{Path, PathBuf};

use crosslab::bergman::build_doubly_orthogonal;
use crosslab::cross::{
    envelope_connected, envelope_membership, omega_sum, sup_on_cross, CrossManifest, FactorManifest, SUP_SAMPLES,
};
use crosslab::extend::{extend_mixed_cross, gluing_schedule, max_principle_check, verify_boundary_extension};
use crosslab::geometry::{Frame, RhoModel, SmoothedCollar};
use crosslab::grid::Lattice;
use crosslab::pshmeasure::boundary_measure;
use crosslab::{CertTag, CrossSpec, FactorSpec, MeasureGrid, MeasureMethod, PluralSet, Slice};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::cache::{Cache, CacheKey};
use crate::manifest::*;
use crate::output::{write_atomic, write_json};
use crate::{plot, CliError};

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Option<f64>,
    pub cache: Cache,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<String, CliError> {
        write_atomic(&self.path(name), text.as_bytes())?;
        Ok(name.to_string())
    }
}

pub fn execute(m: &RunManifest, ctx: &Context) -> Result<Value, CliError> {
    let mut summary = match &m.experiment {
        Experiment::Measure(r) => measure(r, ctx)?,
        Experiment::Envelope(r) => envelope(r, ctx)?,
        Experiment::Basis(r) => basis(r, ctx)?,
        Experiment::Extend(r) => extend(r, ctx)?,
        Experiment::Verify(r) => verify(r, ctx)?,
        Experiment::Slice(r) => slice(r, ctx)?,
        Experiment::Schedule(r) => schedule(r, ctx)?,
    };
    summary["kind"] = json!(m.experiment.kind());
    summary["version"] = json!(VERSION);
    summary["status"] = json!("ok");
    write_json(&ctx.path("report.json"), &summary)?;
    Ok(summary)
}

fn core<T>(r: crosslab::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Core)
}

fn point(c: [f64; 2]) -> C64 {
    C64::new(c[0], c[1])
}

/// The factor measure on the lattice covering its domain.
fn factor_grid(f: &FactorManifest) -> crosslab::Result<MeasureGrid> {
    match (&f.plural, f.method) {
        (PluralSet::Arcs { arcs }, method) => boundary_measure(&f.domain, arcs, method, f.resolution),
        (PluralSet::Interior { .. }, MeasureMethod::ClosedForm) => {
            let spec = FactorSpec::from_manifest(f.clone())?;
            let lattice = Lattice::covering(f.domain.bbox(), f.resolution);
            let values = (0..lattice.len())
                .map(|k| {
                    let z = lattice.node_at(k);
                    if f.domain.contains(z) {
                        spec.omega(z)
                    } else {
                        Ok(f64::NAN)
                    }
                })
                .collect::<crosslab::Result<_>>()?;
            Ok(MeasureGrid::from_values(lattice, values))
        }
        _ => Ok(FactorSpec::from_manifest(f.clone())?.grid().expect("grid factor").clone()),
    }
}

fn cached_grid(f: &FactorManifest, cache: &Cache) -> Result<MeasureGrid, CliError> {
    Ok(cache.get_or_compute(&CacheKey::of(f), || factor_grid(f))?.0)
}

/// Cross spec whose grid measures come from the cache.
pub fn build_cross(m: &CrossManifest, cache: &Cache) -> Result<CrossSpec, CliError> {
    let factors = m
        .factors
        .iter()
        .map(|f| {
            if f.method == MeasureMethod::ClosedForm {
                core(FactorSpec::from_manifest(f.clone()))
            } else {
                let g = cached_grid(f, cache)?;
                core(FactorSpec::with_grid(f.clone(), g))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    core(CrossSpec::new(factors))
}

fn measure(r: &MeasureRun, ctx: &Context) -> Result<Value, CliError> {
    let fm = factor_manifest(r);
    let grid = cached_grid(&fm, &ctx.cache)?;
    let files = vec![
        ctx.write("measure.csv", &grid.to_csv())?,
        ctx.write("measure.svg", &plot::grid_svg(&grid, &r.levels)?)?,
    ];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v) in grid.iter_inside() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|&p| json!({"z": p, "omega": grid.value_at(point(p))}))
        .collect();
    Ok(json!({
        "resolution": r.resolution,
        "method": r.method,
        "inside_cells": grid.inside_count(),
        "min": lo,
        "max": hi,
        "points": points,
        "files": files,
    }))
}

fn envelope(r: &EnvelopeRun, ctx: &Context) -> Result<Value, CliError> {
    let spec = build_cross(&r.cross, &ctx.cache)?;
    let conn = core(envelope_connected(&spec, r.resolution))?;
    let mut csv = String::new();
    for j in 1..=spec.n() {
        csv.push_str(&format!("re_{j},im_{j},"));
    }
    csv.push_str("omega_sum,membership\n");
    let mut rows = Vec::new();
    for coords in factor_points(&r.points) {
        let p = core(spec.point(&coords))?;
        let omega = core(omega_sum(&spec, &p))?;
        let mem = core(envelope_membership(&spec, &p))?;
        for z in &coords {
            csv.push_str(&format!("{},{},", z.re, z.im));
        }
        let label = serde_json::to_value(mem).expect("membership serializes");
        csv.push_str(&format!("{},{}\n", omega, label.as_str().unwrap_or("")));
        rows.push(json!({"coords": coords.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(), "omega_sum": omega, "membership": label}));
    }
    let files = vec![ctx.write("points.csv", &csv)?];
    Ok(json!({"connectivity": conn, "points": rows, "files": files}))
}

fn basis(r: &BasisRun, ctx: &Context) -> Result<Value, CliError> {
    let b = core(build_doubly_orthogonal(&r.domain, &r.measure, r.degree))?;
    let mut nu = String::from("k,nu\n");
    for (k, v) in b.nu.iter().enumerate() {
        nu.push_str(&format!("{k},{v}\n"));
    }
    let files = vec![ctx.write("basis.json", &(b.to_json() + "\n"))?, ctx.write("nu.csv", &nu)?];
    Ok(json!({
        "degree": r.degree,
        "condition": b.condition,
        "residual_set": b.residual_set,
        "residual_domain": b.residual_domain,
        "nu": b.nu,
        "files": files,
    }))
}

fn extend(r: &ExtendRun, ctx: &Context) -> Result<Value, CliError> {
    let spec = build_cross(&r.cross, &ctx.cache)?;
    let cfg = r.config(ctx.tol);
    let fun = r.function;
    let field = core(extend_mixed_cross(&spec, &|z, w| fun.eval2(z, w), &cfg))?;
    let sup_x = sup_on_cross(&spec, &|p: &[C64]| fun.eval(p).norm(), SUP_SAMPLES);
    let check = max_principle_check(&field, sup_x);
    let max_err = field
        .points
        .iter()
        .filter(|p| p.tag == CertTag::SeriesCertified)
        .map(|p| (p.value.expect("certified value") - fun.eval2(p.z, p.w)).norm())
        .fold(0.0, f64::max);
    let files = vec![ctx.write("field.csv", &field.to_csv())?];
    Ok(json!({
        "function": fun,
        "config": cfg,
        "points": field.points.len(),
        "series_certified": field.count(CertTag::SeriesCertified),
        "bound_only": field.count(CertTag::BoundOnly),
        "uncertified": field.count(CertTag::Uncertified),
        "max_certified_error": max_err,
        "max_norm": check,
        "files": files,
    }))
}

fn verify(r: &VerifyRun, ctx: &Context) -> Result<Value, CliError> {
    let spec = build_cross(&r.cross, &ctx.cache)?;
    let fun = r.function;
    let slack = ctx.tol.unwrap_or(r.slack);
    let v = core(verify_boundary_extension(&spec, &|p| fun.eval(p), r.samples, ctx.seed, slack))?;
    let files = vec![ctx.write("bound.csv", &plot::report_csv(&v.bound)?)?];
    Ok(json!({
        "function": fun,
        "samples": r.samples,
        "seed": ctx.seed,
        "slack": slack,
        "passed": v.passed(),
        "membership_checked": v.membership_checked,
        "membership_failures": v.membership_failures,
        "violations": v.bound.violations,
        "min_residual": v.bound.min_residual,
        "sup_a": v.sup_a,
        "sup_x": v.sup_x,
        "continuity_defect": v.continuity_defect,
        "files": files,
    }))
}

fn slice(r: &SliceRun, ctx: &Context) -> Result<Value, CliError> {
    let collar = core(SmoothedCollar::new(RhoModel::perturbed_ball(r.radius, r.perturbation), Frame::default(), r.epsilon))?;
    let s = core(Slice::new(&collar, point(r.q)))?;
    let trace = core(s.trace(&collar, r.patch))?;
    let tangent = s.domain.tangent_ball_radius();
    let verified = s.domain.verify_tangent_balls(tangent, 512);
    let mut csv = String::from("t,x,y\n");
    for (t, z) in s.domain.sample_boundary(256) {
        csv.push_str(&format!("{t},{},{}\n", z.re, z.im));
    }
    let files = vec![ctx.write("slice_boundary.csv", &csv)?];
    Ok(json!({
        "q": r.q,
        "collar_max_deviation": collar.max_deviation,
        "domain": s.domain,
        "arc_trace": trace,
        "holes_filled": s.holes_filled,
        "fit_residual": s.fit_residual,
        "tangent_ball_radius": tangent,
        "tangent_balls_verified": verified,
        "files": files,
    }))
}

fn schedule(r: &ScheduleRun, ctx: &Context) -> Result<Value, CliError> {
    let spec = build_cross(&r.cross, &ctx.cache)?;
    let sch = core(gluing_schedule(&spec, &factor_points(&r.points), r.c, r.n_fold))?;
    let consistency = match r.consistency_resolution {
        Some(res) => Some(core(sch.verify_consistency(&spec, res))?),
        None => None,
    };
    let files = vec![ctx.write("schedule.csv", &sch.to_csv())?];
    Ok(json!({"schedule": sch, "consistency": consistency, "files": files}))
}

/// Cache key of every grid factor a manifest would compute.
pub fn manifest_keys(m: &RunManifest) -> Vec<CacheKey> {
    let crosses: Vec<&CrossManifest> = match &m.experiment {
        Experiment::Measure(r) => return vec![CacheKey::of(&factor_manifest(r))],
        Experiment::Envelope(r) => vec![&r.cross],
        Experiment::Extend(r) => vec![&r.cross],
        Experiment::Verify(r) => vec![&r.cross],
        Experiment::Schedule(r) => vec![&r.cross],
        Experiment::Basis(_) | Experiment::Slice(_) => vec![],
    };
    crosses
        .into_iter()
        .flat_map(|c| c.factors.iter())
        .filter(|f| f.method != MeasureMethod::ClosedForm)
        .map(CacheKey::of)
        .collect()
}

pub fn out_dir(cli: Option<&Path>, m: &RunManifest) -> PathBuf {
    cli.map(Path::to_path_buf).or_else(|| m.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}
