//! Doubly orthogonal polynomial bases: orthonormal in `L²(A, μ)` and
//! orthogonal in the Bergman space of `D`, with norms `ν_k = ‖b_k‖_D`.
//! Coefficient functionals, decay diagnostics and truncated series.

mod linalg;
mod series;

pub(crate) use series::sum_series;
pub use series::{
    assemble_extension, basis_growth_profile, coefficients, coefficients_domain_form, decay_exponents,
    CoefficientField, DecayRow, DecayTable, GrowthProfile, SeriesValue,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArcSet, PlanarDomain};
use crate::quad::gauss_legendre_on;
use crate::C64;

use linalg::{adjoint_back_solve, cholesky, forward_solve, jacobi_hermitian, Mat};

/// Largest admitted condition number of the equilibrated set Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Probability measure `μ` on the set `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetMeasure {
    /// Normalized area measure on a closed region.
    Area { region: PlanarDomain },
    /// Normalized arclength on arcs of the boundary curve of `curve`.
    Arclength { curve: PlanarDomain, arcs: BoundaryArcSet },
}

/// Quadrature rule: nodes with non-negative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<C64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    fn normalized(mut self) -> Self {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        self
    }
}

/// Area rule on a domain star-shaped about `center`: Gauss–Legendre in the
/// radial fraction `s` times the trapezoid rule in the boundary parameter,
/// through `(s, t) ↦ c + s(γ(t) − c)`.
pub fn area_rule(domain: &PlanarDomain, center: C64, n_s: usize, n_t: usize) -> Result<QuadRule> {
    let (s_nodes, s_weights) = gauss_legendre_on(n_s, 0.0, 1.0);
    let mut nodes = Vec::with_capacity(n_s * n_t);
    let mut weights = Vec::with_capacity(n_s * n_t);
    let mut sign = 0.0;
    for i in 0..n_t {
        let t = TAU * i as f64 / n_t as f64;
        let (g, dg, _) = domain.eval(t);
        let r = g - center;
        let jac = (r.conj() * dg).im;
        if jac == 0.0 || (sign != 0.0 && jac.signum() != sign) {
            return Err(Error::Geometry("domain is not star-shaped about its quadrature center".into()));
        }
        sign = jac.signum();
        for (s, ws) in s_nodes.iter().zip(&s_weights) {
            nodes.push(center + *s * r);
            weights.push(ws * s * jac.abs() * TAU / n_t as f64);
        }
    }
    Ok(QuadRule { nodes, weights })
}

/// Arclength rule on boundary arcs: Gauss–Legendre panels in the parameter.
pub fn arc_rule(curve: &PlanarDomain, arcs: &BoundaryArcSet, nodes_per_arc: usize) -> Result<QuadRule> {
    if arcs.is_empty() {
        return Err(Error::Empty("arc set".into()));
    }
    let panels = 4;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for a in arcs.arcs() {
        let h = a.len / panels as f64;
        for p in 0..panels {
            let lo = a.start + p as f64 * h;
            let (t, w) = gauss_legendre_on(nodes_per_arc.div_ceil(panels), lo, lo + h);
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(curve.point(*ti));
                weights.push(wi * curve.speed(*ti));
            }
        }
    }
    Ok(QuadRule { nodes, weights })
}

impl SetMeasure {
    fn center(&self) -> C64 {
        match self {
            SetMeasure::Area { region } => region.interior_point(),
            SetMeasure::Arclength { curve, arcs } => {
                let r = arc_rule(curve, arcs, 16).expect("arc set checked");
                r.nodes.iter().zip(&r.weights).map(|(z, w)| z * w).sum::<C64>() / r.weights.iter().sum::<f64>()
            }
        }
    }

    /// `μ` discretized; `level` 0 is the working rule, 1 a finer check rule.
    pub fn rule(&self, degree: usize, level: usize) -> Result<QuadRule> {
        let (n_s, n_t) = orders(degree, level, self.is_disk());
        let r = match self {
            SetMeasure::Area { region } => area_rule(region, region.interior_point(), n_s, n_t)?,
            SetMeasure::Arclength { curve, arcs } => arc_rule(curve, arcs, n_t)?,
        };
        Ok(r.normalized())
    }

    fn is_disk(&self) -> bool {
        match self {
            SetMeasure::Area { region } => region.as_disk().is_some(),
            SetMeasure::Arclength { curve, .. } => curve.as_disk().is_some(),
        }
    }

    fn validate(&self, domain: &PlanarDomain) -> Result<()> {
        let pts: Vec<C64> = match self {
            SetMeasure::Area { region } => region.sample_boundary(256).into_iter().map(|p| p.1).collect(),
            SetMeasure::Arclength { curve, arcs } => {
                if arcs.is_empty() {
                    return Err(Error::Empty("arc set of the measure".into()));
                }
                arc_rule(curve, arcs, 64)?.nodes
            }
        };
        let tol = 1e-9 * domain.diameter();
        if pts.iter().any(|z| domain.signed_distance(*z) < -tol) {
            return Err(Error::Geometry("the set of the measure must lie in the closed domain".into()));
        }
        Ok(())
    }
}

/// Quadrature orders `(radial, angular)` for degree `K`; exact for the Gram
/// matrices of disks at level 0.
fn orders(degree: usize, level: usize, disk: bool) -> (usize, usize) {
    let (n_s, n_t) = if disk { (degree + 8, 2 * degree + 16) } else { (degree + 16, (8 * degree).max(256)) };
    match level {
        0 => (n_s, n_t),
        _ => (n_s + 12, n_t + n_t / 2),
    }
}

fn domain_rule(domain: &PlanarDomain, degree: usize, level: usize) -> Result<QuadRule> {
    let (n_s, n_t) = orders(degree, level, domain.as_disk().is_some());
    area_rule(domain, domain.interior_point(), n_s, n_t)
}

/// Basis `b_k(z) = Σ_m coeffs[k][m] ζ^m` in the scaled variable
/// `ζ = (z − center)/scale`, sorted by `ν_k` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublyOrthogonalBasis {
    pub domain: PlanarDomain,
    pub measure: SetMeasure,
    pub degree: usize,
    pub center: C64,
    pub scale: f64,
    pub coeffs: Vec<Vec<C64>>,
    pub nu: Vec<f64>,
    /// Condition number of the equilibrated set Gram matrix.
    pub condition: f64,
    /// `max |⟨b_j, b_k⟩_A − δ_jk|` on the finer rule.
    pub residual_set: f64,
    /// `max |⟨b_j, b_k⟩_D − ν_k² δ_jk| / (ν_j ν_k)` on the finer rule.
    pub residual_domain: f64,
}

fn powers(zeta: C64, degree: usize) -> Vec<C64> {
    let mut p = Vec::with_capacity(degree + 1);
    let mut v = C64::new(1.0, 0.0);
    for _ in 0..=degree {
        p.push(v);
        v *= zeta;
    }
    p
}

/// `G[m][l] = Σ_i w_i ζ_i^l conj(ζ_i^m)`, so `⟨a, b⟩ = bᴴ G a`.
fn gram(rule: &QuadRule, center: C64, scale: f64, degree: usize) -> Mat {
    let n = degree + 1;
    let pw: Vec<Vec<C64>> = rule.nodes.par_iter().map(|z| powers((z - center) / scale, degree)).collect();
    let entries: Vec<C64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (m, l) = (idx / n, idx % n);
            if l < m {
                return C64::new(0.0, 0.0);
            }
            pw.iter().zip(&rule.weights).map(|(p, w)| p[l] * p[m].conj() * *w).sum()
        })
        .collect();
    let mut g = Mat { n, a: entries };
    for m in 0..n {
        for l in 0..m {
            g[(m, l)] = g[(l, m)].conj();
        }
    }
    g.hermitize();
    g
}

/// Solves `G_D b = ν² G_A b` with `⟨b, b⟩_A = 1`.
pub fn build_doubly_orthogonal(domain: &PlanarDomain, measure: &SetMeasure, degree: usize) -> Result<DoublyOrthogonalBasis> {
    if degree == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    measure.validate(domain)?;
    let n = degree + 1;
    let set_rule = measure.rule(degree, 0)?;
    let center = measure.center();
    let scale = set_rule.nodes.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::Geometry("the set of the measure is a single point".into()));
    }
    let ga = gram(&set_rule, center, scale, degree);
    let gd = gram(&domain_rule(domain, degree, 0)?, center, scale, degree);

    // Equilibrate by the diagonal of G_A.
    let eq: Vec<f64> = (0..n).map(|m| 1.0 / ga[(m, m)].re.sqrt()).collect();
    let scaled = |g: &Mat| {
        let mut s = g.clone();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= eq[i] * eq[j];
            }
        }
        s
    };
    let (ga_s, gd_s) = (scaled(&ga), scaled(&gd));
    let (ga_eig, _) = jacobi_hermitian(&ga_s, 1e-15)?;
    let lo = ga_eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ga_eig.iter().cloned().fold(0.0, f64::max);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let l = cholesky(&ga_s)?;
    // C = L⁻¹ G_D L⁻ᴴ.
    let x = forward_solve(&l, &gd_s);
    let mut c = forward_solve(&l, &x.adjoint());
    c.hermitize();
    let (lam, y) = jacobi_hermitian(&c, 1e-15)?;
    let z = adjoint_back_solve(&l, &y);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lam[a].total_cmp(&lam[b]).then(a.cmp(&b)));
    let mut coeffs = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    for &k in &order {
        if !(lam[k] > 0.0) {
            return Err(Error::IllConditioned { condition: f64::INFINITY });
        }
        // Fix the phase by the dominant equilibrated coefficient.
        let lead = (0..n).max_by(|&a, &b| z[(a, k)].norm().total_cmp(&z[(b, k)].norm())).unwrap();
        let ph = z[(lead, k)].conj() / z[(lead, k)].norm();
        coeffs.push((0..n).map(|m| z[(m, k)] * eq[m] * ph).collect());
        nu.push(lam[k].sqrt());
    }
    let mut basis = DoublyOrthogonalBasis {
        domain: domain.clone(),
        measure: measure.clone(),
        degree,
        center,
        scale,
        coeffs,
        nu,
        condition,
        residual_set: 0.0,
        residual_domain: 0.0,
    };
    let (ra, rd) = basis.orthogonality_residuals(1)?;
    basis.residual_set = ra;
    basis.residual_domain = rd;
    Ok(basis)
}

impl DoublyOrthogonalBasis {
    pub fn zeta(&self, z: C64) -> C64 {
        (z - self.center) / self.scale
    }

    /// `b_k(z)` for `k = 0..=degree`.
    pub fn eval_all(&self, z: C64) -> Vec<C64> {
        let p = powers(self.zeta(z), self.degree);
        self.coeffs.iter().map(|c| c.iter().zip(&p).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn eval(&self, k: usize, z: C64) -> C64 {
        let p = powers(self.zeta(z), self.degree);
        self.coeffs[k].iter().zip(&p).map(|(a, b)| a * b).sum()
    }

    /// Double orthogonality residuals on the quadrature of the given level.
    pub fn orthogonality_residuals(&self, level: usize) -> Result<(f64, f64)> {
        let ga = gram(&self.measure.rule(self.degree, level)?, self.center, self.scale, self.degree);
        let gd = gram(&domain_rule(&self.domain, self.degree, level)?, self.center, self.scale, self.degree);
        let n = self.degree + 1;
        let form = |g: &Mat, j: usize, k: usize| -> C64 {
            let (a, b) = (&self.coeffs[j], &self.coeffs[k]);
            let mut s = C64::new(0.0, 0.0);
            for m in 0..n {
                for l in 0..n {
                    s += b[m].conj() * g[(m, l)] * a[l];
                }
            }
            s
        };
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
        let (ra, rd) = pairs
            .par_iter()
            .map(|&(j, k)| {
                let d = if j == k { 1.0 } else { 0.0 };
                let a = (form(&ga, j, k) - d).norm();
                let b = (form(&gd, j, k) - d * self.nu[k] * self.nu[k]).norm() / (self.nu[j] * self.nu[k]);
                (a, b)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
        Ok((ra, rd))
    }

    /// Basis as JSON: monomial coefficients, scaling and `ν_k`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("basis serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk_model(r: f64, k: usize) -> DoublyOrthogonalBasis {
        let region = PlanarDomain::make_disk(C64::new(0.0, 0.0), r).unwrap();
        build_doubly_orthogonal(&PlanarDomain::unit_disk(), &SetMeasure::Area { region }, k).unwrap()
    }

    #[test]
    fn area_rule_integrates_moments() {
        let d = PlanarDomain::unit_disk();
        let q = area_rule(&d, C64::new(0.0, 0.0), 12, 24).unwrap();
        let area: f64 = q.weights.iter().sum();
        assert!((area - PI).abs() < 1e-13);
        // ∫ |z|^4 = π/3.
        let m4: f64 = q.nodes.iter().zip(&q.weights).map(|(z, w)| z.norm_sqr().powi(2) * w).sum();
        assert!((m4 - PI / 3.0).abs() < 1e-13);
        let e = PlanarDomain::ellipse(2.0, 1.0).unwrap();
        let qe = area_rule(&e, C64::new(0.0, 0.0), 8, 64).unwrap();
        assert!((qe.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn disk_model_norms_grow_like_inverse_radius() {
        for (r, k) in [(0.5, 20), (0.9, 12)] {
            let b = disk_model(r, k);
            for (j, nu) in b.nu.iter().enumerate() {
                let exact = PI.sqrt() * r.powi(-(j as i32));
                assert!((nu / exact - 1.0).abs() < 1e-10, "r={r} k={j}: {nu} vs {exact}");
            }
            assert!(b.residual_set < 1e-10 && b.residual_domain < 1e-10, "{} {}", b.residual_set, b.residual_domain);
        }
    }

    #[test]
    fn disk_model_basis_is_monomial() {
        let b = disk_model(0.5, 10);
        for k in 0..=10 {
            // b_k = √(k+1) (z/r)^k.
            let z = C64::new(0.3, -0.4);
            let exact = ((k + 1) as f64).sqrt() * (z / 0.5).powu(k as u32);
            assert!((b.eval(k, z) - exact).norm() < 1e-10 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn whole_domain_has_constant_norms() {
        let d = PlanarDomain::unit_disk();
        let b = build_doubly_orthogonal(&d, &SetMeasure::Area { region: d.clone() }, 8).unwrap();
        for nu in &b.nu {
            assert!((nu - PI.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn arclength_measure_on_an_inner_circle() {
        // μ = normalized arclength on |z| = 1/2: ‖z^k‖² = 4^{-k}.
        let c = PlanarDomain::make_disk(C64::new(0.0, 0.0), 0.5).unwrap();
        let m = SetMeasure::Arclength { curve: c, arcs: BoundaryArcSet::full() };
        let b = build_doubly_orthogonal(&PlanarDomain::unit_disk(), &m, 12).unwrap();
        for (k, nu) in b.nu.iter().enumerate() {
            let exact = (PI / (k + 1) as f64).sqrt() * 2f64.powi(k as i32);
            assert!((nu / exact - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn errors() {
        let d = PlanarDomain::unit_disk();
        let region = PlanarDomain::make_disk(C64::new(0.0, 0.0), 0.5).unwrap();
        assert!(build_doubly_orthogonal(&d, &SetMeasure::Area { region: region.clone() }, 0).is_err());
        let outside = PlanarDomain::make_disk(C64::new(0.8, 0.0), 0.5).unwrap();
        assert!(build_doubly_orthogonal(&d, &SetMeasure::Area { region: outside }, 4).is_err());
        // A tiny set makes the equilibrated Gram matrix singular at high degree.
        let tiny = SetMeasure::Arclength {
            curve: PlanarDomain::unit_disk(),
            arcs: BoundaryArcSet::new(&[(0.0, 1e-3)]).unwrap(),
        };
        assert!(matches!(build_doubly_orthogonal(&d, &tiny, 40), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn json_round_trip() {
        let b = disk_model(0.5, 4);
        let back: DoublyOrthogonalBasis = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(back, b);
    }
}
