use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::C64;

use super::{domain_rule, DoublyOrthogonalBasis, QuadRule};

/// Largest admitted change of a coefficient between two quadrature orders.
pub const COEFF_QUAD_TOL: f64 = 1e-8;

/// `ĉ_k(w) = ∫_A f(z, w) conj(b_k(z)) dμ(z)` at sampled `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub degree: usize,
    pub w: Vec<C64>,
    /// `values[i][k] = ĉ_k(w_i)`.
    pub values: Vec<Vec<C64>>,
    /// Absolute error estimate of each value: rounding plus the change
    /// between quadrature orders.
    pub noise: Vec<Vec<f64>>,
}

impl CoefficientField {
    /// Columns `k, w_re, w_im, c_re, c_im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,w_re,w_im,c_re,c_im\n");
        for (w, row) in self.w.iter().zip(&self.values) {
            for (k, c) in row.iter().enumerate() {
                let _ = writeln!(s, "{k},{},{},{},{}", w.re, w.im, c.re, c.im);
            }
        }
        s
    }
}

fn project(
    basis: &DoublyOrthogonalBasis,
    rule: &QuadRule,
    bvals: &[Vec<C64>],
    f: &(dyn Fn(C64) -> C64 + Sync),
) -> (Vec<C64>, Vec<f64>) {
    let n = basis.degree + 1;
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut mag = vec![0.0; n];
    for ((z, w), b) in rule.nodes.iter().zip(&rule.weights).zip(bvals) {
        let fz = f(*z) * *w;
        for k in 0..n {
            let t = fz * b[k].conj();
            c[k] += t;
            mag[k] += t.norm();
        }
    }
    (c, mag)
}

fn coefficient_field(
    basis: &DoublyOrthogonalBasis,
    w_samples: &[C64],
    rules: [QuadRule; 2],
    weight: impl Fn(usize) -> f64 + Sync,
    f: &(dyn Fn(C64, C64) -> C64 + Sync),
) -> Result<CoefficientField> {
    let bv: Vec<Vec<Vec<C64>>> =
        rules.iter().map(|r| r.nodes.par_iter().map(|z| basis.eval_all(*z)).collect()).collect();
    let rows: Vec<(Vec<C64>, Vec<f64>)> = w_samples
        .par_iter()
        .map(|&w| {
            let g = |z: C64| f(z, w);
            let (c0, mag) = project(basis, &rules[0], &bv[0], &g);
            let (c1, _) = project(basis, &rules[1], &bv[1], &g);
            let mut vals = Vec::with_capacity(c0.len());
            let mut noise = Vec::with_capacity(c0.len());
            for k in 0..c0.len() {
                let s = weight(k);
                let (a, b) = (c0[k] * s, c1[k] * s);
                let change = (a - b).norm();
                if !(change <= COEFF_QUAD_TOL) || !a.re.is_finite() || !a.im.is_finite() {
                    return Err(Error::Quadrature { change });
                }
                vals.push(b);
                noise.push(change + 4.0 * f64::EPSILON * mag[k] * s.abs());
            }
            Ok((vals, noise))
        })
        .collect::<Result<_>>()?;
    let (values, noise) = rows.into_iter().unzip();
    Ok(CoefficientField { degree: basis.degree, w: w_samples.to_vec(), values, noise })
}

/// Coefficients by quadrature over `A`, compared between two orders.
pub fn coefficients(
    basis: &DoublyOrthogonalBasis,
    f: &(dyn Fn(C64, C64) -> C64 + Sync),
    w_samples: &[C64],
) -> Result<CoefficientField> {
    let rules = [basis.measure.rule(basis.degree, 0)?, basis.measure.rule(basis.degree, 1)?];
    coefficient_field(basis, w_samples, rules, |_| 1.0, f)
}

/// Coefficients through the domain form `⟨f(·, w), b_k⟩_D / ν_k²`, valid
/// when `f(·, w)` is holomorphic on a neighbourhood of `D̄`.
pub fn coefficients_domain_form(
    basis: &DoublyOrthogonalBasis,
    f: &(dyn Fn(C64, C64) -> C64 + Sync),
    w_samples: &[C64],
) -> Result<CoefficientField> {
    let rules = [domain_rule(&basis.domain, basis.degree, 0)?, domain_rule(&basis.domain, basis.degree, 1)?];
    let inv: Vec<f64> = basis.nu.iter().map(|v| 1.0 / (v * v)).collect();
    coefficient_field(basis, w_samples, rules, |k| inv[k], f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: usize,
    pub w: C64,
    /// `log|ĉ_k(w)| / log ν_k`; `-inf` for a zero coefficient.
    pub exponent: f64,
    /// `ω(w) − 1 + ε`.
    pub threshold: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub flagged: usize,
}

/// Exponent table for all `k` with `ν_k > 1`; `omega[i]` is `ω(w_i, B, G)`.
pub fn decay_exponents(
    coeffs: &CoefficientField,
    basis: &DoublyOrthogonalBasis,
    omega: &[f64],
    eps_report: f64,
) -> Result<DecayTable> {
    if omega.len() != coeffs.w.len() {
        return Err(Error::invalid("one omega value per w sample is required"));
    }
    let mut rows = Vec::new();
    for ((w, vals), om) in coeffs.w.iter().zip(&coeffs.values).zip(omega) {
        for (k, c) in vals.iter().enumerate() {
            let nu = basis.nu[k];
            if !(nu > 1.0) {
                continue;
            }
            let threshold = om - 1.0 + eps_report;
            let exponent = if c.norm() == 0.0 { f64::NEG_INFINITY } else { c.norm().ln() / nu.ln() };
            let flagged = exponent.is_finite() && exponent > threshold;
            rows.push(DecayRow { k, w: *w, exponent, threshold, flagged });
        }
    }
    let flagged = rows.iter().filter(|r| r.flagged).count();
    Ok(DecayTable { rows, flagged })
}

/// Partial sum of `Σ ĉ_k(w) b_k(z)` with its error estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: C64,
    /// Number of terms summed.
    pub terms: usize,
    /// Estimated truncation error from the fitted geometric decay.
    pub tail_bound: f64,
    /// Accumulated coefficient noise of the summed terms.
    pub noise_bound: f64,
}

impl SeriesValue {
    pub fn error_bound(&self) -> f64 {
        self.tail_bound + self.noise_bound
    }
}

/// Terms used for the decay fit.
const FIT_TERMS: usize = 10;

/// Sums the series at `(z, w_index)` using at most `k_max + 1` terms.
///
/// Terms with `|ĉ_k| > 10·noise_k` carry signal; a geometric model fitted to
/// the last signal terms bounds everything that is not summed. The number of
/// terms minimizes the sum of the truncation estimate and the noise carried
/// by the summed terms. `omega_sum` is `ω(z) + ω(w)` at the point.
pub fn assemble_extension(
    basis: &DoublyOrthogonalBasis,
    coeffs: &CoefficientField,
    w_index: usize,
    z: C64,
    k_max: usize,
    omega_sum: f64,
) -> Result<SeriesValue> {
    if !(omega_sum < 1.0) {
        return Err(Error::not_admissible(z, format!("omega sum {omega_sum} is not below 1")));
    }
    if w_index >= coeffs.values.len() {
        return Err(Error::invalid("w index out of range"));
    }
    sum_series(&basis.eval_all(z), coeffs, w_index, z, k_max.min(basis.degree))
}

/// Series at a point with precomputed basis values `b[k] = b_k(z)`.
pub(crate) fn sum_series(b: &[C64], coeffs: &CoefficientField, w_index: usize, z: C64, kmax: usize) -> Result<SeriesValue> {
    let c = &coeffs.values[w_index];
    let noise = &coeffs.noise[w_index];
    let tau: Vec<f64> = (0..=kmax).map(|k| c[k].norm() * b[k].norm()).collect();
    let eta: Vec<f64> = (0..=kmax).map(|k| noise[k] * b[k].norm()).collect();
    let signal: Vec<usize> = (0..=kmax).filter(|&k| c[k].norm() > 10.0 * noise[k] && tau[k] > 0.0).collect();

    // ln τ_k ≈ α + β k over the last signal terms, α taken as an upper envelope.
    let model = if signal.len() >= 4 {
        let pts = &signal[signal.len().saturating_sub(FIT_TERMS)..];
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &k| (a + k as f64, b + tau[k].ln()));
        let (mx, my) = (sx / m, sy / m);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), &k| {
            let dx = k as f64 - mx;
            (a + dx * (tau[k].ln() - my), b + dx * dx)
        });
        let beta = num / den;
        if beta >= 0.0 {
            return Err(Error::Divergent(format!(
                "series terms at z = {z} grow by a factor {:.3} per degree",
                beta.exp()
            )));
        }
        let alpha = pts.iter().map(|&k| tau[k].ln() - beta * k as f64).fold(f64::NEG_INFINITY, f64::max);
        Some((alpha, beta))
    } else {
        None
    };
    let model_at = |k: usize| model.map(|(a, b)| (a + b * k as f64).exp());
    let is_signal = |k: usize| signal.binary_search(&k).is_ok();
    // Bound on the true size of each term that may be left out.
    let left_out: Vec<f64> = (0..=kmax)
        .map(|k| {
            if is_signal(k) {
                tau[k] + eta[k]
            } else {
                let cap = 11.0 * eta[k];
                model_at(k).map_or(cap, |m| m.min(cap))
            }
        })
        .collect();
    let beyond = match model {
        Some((_, beta)) => model_at(kmax + 1).unwrap() / (1.0 - beta.exp()),
        None => 0.0,
    };
    let mut best = (f64::INFINITY, 0usize, 0.0, 0.0);
    let mut suffix = beyond;
    let mut tails = vec![0.0; kmax + 1];
    for k in (0..=kmax).rev() {
        tails[k] = suffix;
        suffix += left_out[k];
    }
    // Terms at the noise level are dropped from the sum; their true size is
    // at most twice the noise.
    let dropped = |k: usize| c[k].norm() <= noise[k];
    let mut acc_noise = 0.0;
    for k in 0..=kmax {
        acc_noise += if dropped(k) { 2.0 * eta[k] } else { eta[k] };
        let e = acc_noise + tails[k];
        if e < best.0 {
            best = (e, k, tails[k], acc_noise);
        }
    }
    let (_, k_used, tail_bound, noise_bound) = best;
    let value = (0..=k_used).filter(|&k| !dropped(k)).map(|k| c[k] * b[k]).sum();
    Ok(SeriesValue { value, terms: k_used + 1, tail_bound, noise_bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    /// `sup |b_k|` over the sample set.
    pub sup: Vec<f64>,
    /// `log sup|b_k| / log ν_k`, `NaN` where `ν_k ≤ 1`.
    pub ratio: Vec<f64>,
    /// Slope of `log sup|b_k|` against `log ν_k` over the upper half of the
    /// degrees with `ν_k > 1`.
    pub alpha: f64,
}

/// `sup_{K_set} |b_k|` and the growth exponent against `ν_k`.
pub fn basis_growth_profile(basis: &DoublyOrthogonalBasis, points: &[C64]) -> Result<GrowthProfile> {
    if points.is_empty() {
        return Err(Error::Empty("sample set".into()));
    }
    let n = basis.degree + 1;
    let sup = points
        .par_iter()
        .map(|z| basis.eval_all(*z).iter().map(|v| v.norm()).collect::<Vec<f64>>())
        .reduce(|| vec![0.0; n], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    let ratio: Vec<f64> =
        sup.iter().zip(&basis.nu).map(|(s, nu)| if *nu > 1.0 { s.ln() / nu.ln() } else { f64::NAN }).collect();
    let ks: Vec<usize> = (0..n).filter(|&k| basis.nu[k] > 1.0 && sup[k] > 0.0).collect();
    let upper = &ks[ks.len() / 2..];
    let alpha = if upper.len() >= 2 {
        let xs: Vec<f64> = upper.iter().map(|&k| basis.nu[k].ln()).collect();
        let ys: Vec<f64> = upper.iter().map(|&k| sup[k].ln()).collect();
        let m = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(GrowthProfile { sup, ratio, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{build_doubly_orthogonal, SetMeasure};
    use crate::geometry::PlanarDomain;
    use std::f64::consts::PI;

    fn model(k: usize) -> DoublyOrthogonalBasis {
        let region = PlanarDomain::make_disk(C64::new(0.0, 0.0), 0.5).unwrap();
        build_doubly_orthogonal(&PlanarDomain::unit_disk(), &SetMeasure::Area { region }, k).unwrap()
    }

    fn pole(z: C64, w: C64) -> C64 {
        1.0 / (2.0 - z * w)
    }

    /// `ĉ_k(w) = w^k / (2^{2k+1} √(k+1))`.
    fn pole_coefficient(k: usize, w: C64) -> C64 {
        w.powu(k as u32) / (2f64.powi(2 * k as i32 + 1) * ((k + 1) as f64).sqrt())
    }

    #[test]
    fn coefficients_match_the_geometric_series() {
        let b = model(20);
        let ws = [C64::new(0.5, 0.0), C64::new(-0.3, 0.6), C64::from_polar(1.0, 2.0)];
        let c = coefficients(&b, &pole, &ws).unwrap();
        for (i, w) in ws.iter().enumerate() {
            for k in 0..=20 {
                let d = (c.values[i][k] - pole_coefficient(k, *w)).norm();
                assert!(d <= 1e-15 + c.noise[i][k], "k={k} w={w}: {d} vs noise {}", c.noise[i][k]);
            }
        }
    }

    #[test]
    fn domain_form_agrees_for_boundary_w() {
        let b = model(12);
        let ws = [C64::from_polar(1.0, 0.3), C64::from_polar(1.0, 4.0)];
        let a = coefficients(&b, &pole, &ws).unwrap();
        let d = coefficients_domain_form(&b, &pole, &ws).unwrap();
        for i in 0..2 {
            for k in 0..=12 {
                assert!((a.values[i][k] - d.values[i][k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_data_has_single_coefficients() {
        let b = model(8);
        let ws = [C64::new(0.2, 0.1)];
        let c = coefficients(&b, &|_, w| w.exp(), &ws).unwrap();
        assert!((c.values[0][0] - ws[0].exp()).norm() < 1e-14);
        assert!(c.values[0][1..].iter().all(|v| v.norm() < 1e-14));
        let c3 = coefficients(&b, &|z, w| z.powu(3) * w, &ws).unwrap();
        for k in 0..=8 {
            assert_eq!(c3.values[0][k].norm() > 1e-14, k == 3, "k={k}");
        }
    }

    #[test]
    fn bessel_inequality() {
        let b = model(16);
        let w = C64::new(0.7, -0.2);
        let c = coefficients(&b, &pole, &[w]).unwrap();
        let sum: f64 = c.values[0].iter().map(|v| v.norm_sqr()).sum();
        let rule = b.measure.rule(16, 1).unwrap();
        let norm: f64 = rule.nodes.iter().zip(&rule.weights).map(|(z, q)| pole(*z, w).norm_sqr() * q).sum();
        assert!(sum <= norm + 1e-6);
    }

    #[test]
    fn series_reproduces_the_pole_function() {
        let b = model(40);
        let w = C64::new(0.5, 0.0);
        let c = coefficients(&b, &pole, &[w]).unwrap();
        let z = C64::new(0.6, 0.0);
        let s = assemble_extension(&b, &c, 0, z, 40, 0.5).unwrap();
        assert!((s.value - 1.0 / 1.7).norm() < 1e-6, "{s:?}");
        assert!(s.error_bound() < 1e-6);
        assert!(assemble_extension(&b, &c, 0, z, 40, 1.0).is_err());
        // Inside A the series is the expansion of f itself.
        let z = C64::new(0.2, 0.3);
        let s = assemble_extension(&b, &c, 0, z, 40, 0.1).unwrap();
        assert!((s.value - pole(z, w)).norm() < 1e-12);
    }

    #[test]
    fn polynomials_are_reproduced_across_the_domain() {
        let b = model(10);
        let ws = [C64::new(0.3, 0.4), C64::from_polar(1.0, 1.0)];
        let f = |z: C64, w: C64| z * w + z.powu(4) - 2.0 * w;
        let c = coefficients(&b, &f, &ws).unwrap();
        for (i, w) in ws.iter().enumerate() {
            for z in [C64::new(0.9, 0.0), C64::new(-0.2, 0.95), C64::new(0.0, 0.0)] {
                let s = assemble_extension(&b, &c, i, z, 10, 0.0).unwrap();
                assert!((s.value - f(z, *w)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn divergence_is_detected() {
        let b = model(30);
        let mut grow = coefficients(&b, &pole, &[C64::new(1.0, 0.0)]).unwrap();
        // |ĉ_k b_k(0.9)| grows like (0.55 · 1.8)^k · 1.1^k.
        for k in 0..=30 {
            grow.values[0][k] = C64::new(0.55f64.powi(k as i32) * 1.1f64.powi(k as i32), 0.0);
            grow.noise[0][k] = 1e-30;
        }
        assert!(matches!(
            assemble_extension(&b, &grow, 0, C64::new(0.9, 0.0), 30, 0.5),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn synthetic_decay_is_flagged_only_below_threshold() {
        let b = model(12);
        let mut c = coefficients(&b, &pole, &[C64::new(0.1, 0.0), C64::new(0.2, 0.0)]).unwrap();
        for row in &mut c.values {
            for (k, v) in row.iter_mut().enumerate() {
                *v = C64::new(b.nu[k].powf(-0.5), 0.0);
            }
        }
        let t = decay_exponents(&c, &b, &[0.3, 0.7], 0.1).unwrap();
        for r in &t.rows {
            assert!((r.exponent + 0.5).abs() < 1e-12);
            assert_eq!(r.flagged, r.w.re < 0.15, "{r:?}");
        }
    }

    #[test]
    fn growth_exponent_matches_the_extremal_function() {
        let b = model(40);
        let rho = 0.5f64.sqrt();
        let pts: Vec<C64> = (0..64).map(|i| C64::from_polar(rho, TAU_64 * i as f64)).collect();
        let g = basis_growth_profile(&b, &pts).unwrap();
        assert!((g.alpha - 0.5).abs() < 0.05, "{}", g.alpha);
        let on_a: Vec<C64> = (0..64).map(|i| C64::from_polar(0.5, TAU_64 * i as f64)).collect();
        let ga = basis_growth_profile(&b, &on_a).unwrap();
        assert!(ga.alpha.abs() < 0.05, "{}", ga.alpha);
    }

    const TAU_64: f64 = 2.0 * PI / 64.0;

    #[test]
    fn csv_layout() {
        let b = model(2);
        let c = coefficients(&b, &pole, &[C64::new(0.5, 0.0)]).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("k,w_re,w_im,c_re,c_im\n0,0.5,0,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
