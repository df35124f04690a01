use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain};
use crate::C64;

/// Walk-on-spheres estimator configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub sample_count: u64,
    /// Absorption distance to the boundary.
    pub shell_epsilon: f64,
    pub max_steps: u32,
    pub seed: u64,
}

impl Default for WosConfig {
    fn default() -> Self {
        WosConfig { sample_count: 100_000, shell_epsilon: 1e-4, max_steps: 10_000, seed: 0 }
    }
}

impl WosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::invalid("sample_count must be at least 1"));
        }
        if !(self.shell_epsilon > 0.0) {
            return Err(Error::invalid("shell_epsilon must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    #[serde(rename = "stderr")]
    pub standard_error: f64,
    #[serde(rename = "n")]
    pub sample_count: u64,
    pub seed: u64,
}

/// Samples per rayon task; the split is fixed so results do not depend on the
/// number of workers.
const CHUNK: u64 = 4096;

/// Harmonic measure of `∂D ∖ A` at `z` by walk on spheres.
///
/// Every sample draws from its own ChaCha8 stream (seed, stream = sample
/// index), so the estimate is bit-identical for any thread count. A walk
/// scores 1 when the nearest boundary point at absorption lies outside the
/// open arcs, so arc endpoints count towards `∂D ∖ A`.
pub fn harmonic_measure_wos(
    z: C64,
    domain: &PlanarDomain,
    arcs: &BoundaryArcSet,
    cfg: &WosConfig,
) -> Result<MeasureEstimate> {
    cfg.validate()?;
    let r = domain.tangent_ball_radius();
    if cfg.shell_epsilon >= r / 10.0 {
        return Err(Error::invalid(format!(
            "shell_epsilon {} must be below a tenth of the tangent radius {r}",
            cfg.shell_epsilon
        )));
    }
    let start = domain.boundary_point(z);
    if !start.inside {
        return Err(Error::not_admissible(z, "start point must be interior"));
    }
    let chunks = cfg.sample_count.div_ceil(CHUNK);
    let (hits, failures) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.sample_count);
            let mut hits = 0u64;
            let mut failures = 0u64;
            for s in lo..hi {
                match walk(z, domain, arcs, cfg, s) {
                    Some(true) => hits += 1,
                    Some(false) => {}
                    None => failures += 1,
                }
            }
            (hits, failures)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if failures * 1000 > cfg.sample_count {
        return Err(Error::WalkFailures { failures, samples: cfg.sample_count });
    }
    let n = cfg.sample_count - failures;
    let p = hits as f64 / n as f64;
    Ok(MeasureEstimate {
        value: p,
        standard_error: (p * (1.0 - p) / n as f64).sqrt(),
        sample_count: n,
        seed: cfg.seed,
    })
}

/// One walk; `Some(true)` when it exits through `∂D ∖ A`, `None` on step cap.
fn walk(z: C64, domain: &PlanarDomain, arcs: &BoundaryArcSet, cfg: &WosConfig, sample: u64) -> Option<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(sample);
    let mut x = z;
    for _ in 0..cfg.max_steps {
        let b = domain.boundary_point(x);
        if b.dist < cfg.shell_epsilon || !b.inside {
            return Some(!arcs.contains(b.t));
        }
        let phi = rng.gen::<f64>() * TAU;
        x += b.dist * C64::new(phi.cos(), phi.sin());
    }
    None
}
