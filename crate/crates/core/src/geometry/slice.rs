use std::f64::consts::TAU;

use super::arcs::BoundaryArcSet;
use super::collar::{norm4, SmoothedCollar};
use super::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::C64;

/// Number of rays used to trace a slice boundary.
const RAYS: usize = 1024;
/// Trigonometric degree of the fitted slice boundary.
const FIT_DEGREE: usize = 256;

/// Planar slice `V_Q = {t : ρ_ε(t, Q) < 0}` of a smoothing collar, hole-filled.
///
/// The boundary is parametrized by the polar angle about the centre of the
/// tangent ball, `c = -r`, so the parameter of a boundary point is its angle
/// seen from `c`.
#[derive(Clone, Debug)]
pub struct Slice {
    /// Second coordinate of the slice, in local collar coordinates.
    pub q: C64,
    pub center: C64,
    pub domain: PlanarDomain,
    /// Slice boundary parameters lying on `∂D` within distance `2ε` of the
    /// base point.
    pub arc_trace: BoundaryArcSet,
    /// Bounded components of the complement found by flood fill before
    /// hole filling.
    pub holes_filled: usize,
    /// Largest distance between the fitted curve and the traced boundary
    /// points at the ray nodes.
    pub fit_residual: f64,
}

impl Slice {
    /// The slice through `(·, q)` (local coordinates). Admissible slices have
    /// `|q| < ε`.
    pub fn new(collar: &SmoothedCollar, q: C64) -> Result<Self> {
        let eps = collar.epsilon;
        if !(q.norm() < eps) {
            return Err(Error::not_admissible(q, format!("slice parameter needs |q| < {eps}")));
        }
        let r = collar.tangent_radius();
        let center = C64::new(-r, 0.0);
        let f = |t: C64| collar.rho_eps([t.re, t.im, q.re, q.im]).0;

        let s_max = r + 4.0 * eps;
        let step = (eps / 4.0).min(r / 256.0);
        let mut radii = Vec::with_capacity(RAYS);
        for k in 0..RAYS {
            let th = TAU * k as f64 / RAYS as f64;
            let dir = C64::new(th.cos(), th.sin());
            // Outermost sign change along the ray: scan inwards to the first
            // negative value, then bisect.
            let mut hi = s_max;
            if f(center + dir * hi) < 0.0 {
                return Err(Error::Geometry("slice is not contained in the collar window".into()));
            }
            let mut lo = hi - step;
            while lo > 0.0 && f(center + dir * lo) >= 0.0 {
                hi = lo;
                lo -= step;
            }
            if lo <= 0.0 {
                return Err(Error::Geometry(format!("slice ray at angle {th} found no interior")));
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(center + dir * mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            radii.push(0.5 * (lo + hi));
        }

        let domain = fit_polar_curve(center, &radii)?;
        let fit_residual = radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let th = TAU * k as f64 / RAYS as f64;
                (domain.point(th) - center - r * C64::new(th.cos(), th.sin())).norm()
            })
            .fold(0.0, f64::max);
        let holes_filled = count_holes(collar, q);
        let mut slice =
            Slice { q, center, domain, arc_trace: BoundaryArcSet::empty(), holes_filled, fit_residual };
        slice.arc_trace = slice.trace(collar, 2.0 * eps)?;
        Ok(slice)
    }

    /// Boundary parameters whose point lies on `∂D = {ρ = 0}` and within
    /// distance `patch` of the base point. Points count as on `∂D` when `|ρ|`
    /// is within the fit residual (and at least 1e-12).
    pub fn trace(&self, collar: &SmoothedCollar, patch: f64) -> Result<BoundaryArcSet> {
        let q = self.q;
        let tol = (4.0 * self.fit_residual).max(1e-12);
        let pred = |th: f64| {
            let t = self.domain.point(th);
            let x = [t.re, t.im, q.re, q.im];
            norm4(x) < patch && collar.rho.value(x).abs() <= tol
        };
        let n = 4096;
        let flags: Vec<bool> = (0..n).map(|k| pred(TAU * k as f64 / n as f64)).collect();
        if flags.iter().all(|&b| b) {
            return Ok(BoundaryArcSet::full());
        }
        let refine = |mut a: f64, mut b: f64, a_in: bool| {
            // Transition between a (flag a_in) and b.
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                if pred(m) == a_in {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let start = flags.iter().position(|&b| !b).unwrap_or(0);
        let mut arcs = Vec::new();
        let mut open: Option<f64> = None;
        for j in 1..=n {
            let k = (start + j) % n;
            let prev = (start + j - 1) % n;
            let t_prev = TAU * (start + j - 1) as f64 / n as f64;
            let t_cur = TAU * (start + j) as f64 / n as f64;
            if flags[k] && !flags[prev] {
                open = Some(refine(t_prev, t_cur, false));
            } else if !flags[k] && flags[prev] {
                if let Some(a) = open.take() {
                    let b = refine(t_prev, t_cur, true);
                    if b > a {
                        arcs.push((a, b));
                    }
                }
            }
        }
        BoundaryArcSet::new(&arcs)
    }
}

/// Trigonometric fit of the star-shaped curve `c + R(θ)e^{iθ}`; returns an
/// exact disk when the radius is constant.
fn fit_polar_curve(center: C64, radii: &[f64]) -> Result<PlanarDomain> {
    let m = radii.len();
    let mean = radii.iter().sum::<f64>() / m as f64;
    let spread = radii.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-13 * mean {
        return PlanarDomain::make_disk(center, mean);
    }
    let pts: Vec<C64> = radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let th = TAU * k as f64 / m as f64;
            center + r * C64::new(th.cos(), th.sin())
        })
        .collect();
    let deg = FIT_DEGREE.min(m / 2 - 1);
    let mut coeffs = Vec::with_capacity(deg + 1);
    for k in 0..=deg {
        let (mut ax, mut bx, mut ay, mut by) = (0.0, 0.0, 0.0, 0.0);
        for (j, p) in pts.iter().enumerate() {
            let a = k as f64 * TAU * j as f64 / m as f64;
            let (s, c) = a.sin_cos();
            ax += p.re * c;
            bx += p.re * s;
            ay += p.im * c;
            by += p.im * s;
        }
        let w = if k == 0 { 1.0 / m as f64 } else { 2.0 / m as f64 };
        coeffs.push([ax * w, bx * w, ay * w, by * w]);
    }
    PlanarDomain::make_smooth_domain(coeffs)
}

/// Bounded components of `{ρ_ε >= 0}` inside the window `|t| <= 2ε + margin`,
/// at spacing `ε/64`.
fn count_holes(collar: &SmoothedCollar, q: C64) -> usize {
    let eps = collar.epsilon;
    let half = 2.0 * eps + 4.0 * eps / 64.0;
    let h = eps / 64.0;
    let n = (2.0 * half / h).ceil() as usize;
    let idx = |i: usize, j: usize| j * n + i;
    let mut outside = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let t = C64::new(-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h);
            outside[idx(i, j)] = collar.rho_eps([t.re, t.im, q.re, q.im]).0 >= 0.0;
        }
    }
    let mut label = vec![0u32; n * n];
    let mut holes = 0;
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..n * n {
        if !outside[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        let mut touches_edge = false;
        label[start] = next;
        stack.push(start);
        while let Some(c) = stack.pop() {
            let (i, j) = (c % n, c / n);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                touches_edge = true;
            }
            let mut visit = |ii: usize, jj: usize| {
                let k = idx(ii, jj);
                if outside[k] && label[k] == 0 {
                    label[k] = next;
                    stack.push(k);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < n {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < n {
                visit(i, j + 1);
            }
        }
        if !touches_edge {
            holes += 1;
        }
    }
    holes
}

/// Empirical constant `max dist(z, ∂V_Q)/dist(z, ∂D)` together with
/// `max dist(z, ζ)/dist(z, ∂D)`, where `ζ` is the point of `∂D` sharing all
/// coordinates with `z` except `x1`. Samples are ambient points.
pub fn distance_equivalence_constant(
    collar: &SmoothedCollar,
    slice: &Slice,
    samples: &[[C64; 2]],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("sample set".into()));
    }
    let mut c: f64 = 0.0;
    for &p in samples {
        let [t, q] = collar.frame.to_local(p);
        if (q - slice.q).norm() > 1e-9 {
            return Err(Error::not_admissible(t, "sample does not lie on the slice"));
        }
        if !slice.domain.contains(t) {
            return Err(Error::not_admissible(t, "sample lies outside the slice domain"));
        }
        let x = [t.re, t.im, q.re, q.im];
        let (d_d, _) = collar.distance_to_boundary(x);
        if !(d_d > 0.0) {
            return Err(Error::not_admissible(t, "sample lies on the boundary"));
        }
        let d_slice = slice.domain.boundary_distance(t);
        let zeta = collar.graph([x[1], x[2], x[3]], 0.0);
        let d_zeta = (x[0] - zeta).abs();
        c = c.max(d_slice / d_d).max(d_zeta / d_d);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::collar::{Frame, RhoModel};

    fn ball() -> SmoothedCollar {
        SmoothedCollar::new(RhoModel::ball(1.0), Frame::default(), 0.01).unwrap()
    }

    fn perturbed() -> SmoothedCollar {
        SmoothedCollar::new(RhoModel::perturbed_ball(1.0, 1.0), Frame::default(), 0.01).unwrap()
    }

    #[test]
    fn ball_slice_through_base_point_is_the_tangent_disk() {
        let s = Slice::new(&ball(), C64::new(0.0, 0.0)).unwrap();
        let (c, r) = s.domain.as_disk().expect("ball slices are disks");
        assert!((c - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((r - 1.0).abs() < 1e-14);
        assert_eq!(s.holes_filled, 0);
    }

    #[test]
    fn ball_slice_off_center_is_a_chord_disk() {
        let q = C64::new(0.004, 0.003);
        let s = Slice::new(&ball(), q).unwrap();
        let (_, r) = s.domain.as_disk().unwrap();
        assert!((r - (1.0 - q.norm_sqr()).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn perturbed_slice_is_simply_connected() {
        let c = perturbed();
        let s = Slice::new(&c, C64::new(0.005, 0.0)).unwrap();
        assert_eq!(s.holes_filled, 0);
        assert!(s.domain.as_disk().is_none());
        assert!(s.domain.tangent_ball_radius() > 0.0);
        // The trace is an arc around the base point.
        assert!(s.fit_residual < 1e-6, "{}", s.fit_residual);
        assert!(s.arc_trace.contains(0.0));
        assert!(!s.arc_trace.contains(std::f64::consts::PI));
    }

    #[test]
    fn inadmissible_parameter_is_rejected() {
        assert!(Slice::new(&ball(), C64::new(0.02, 0.0)).is_err());
    }

    #[test]
    fn distance_constant_on_normal_is_one_for_ball() {
        let c = ball();
        let s = Slice::new(&c, C64::new(0.0, 0.0)).unwrap();
        let samples: Vec<[C64; 2]> = (1..20)
            .map(|k| [C64::new(-0.0005 * k as f64, 0.0), C64::new(0.0, 0.0)])
            .collect();
        let k = distance_equivalence_constant(&c, &s, &samples).unwrap();
        assert!((k - 1.0).abs() < 1e-9, "{k}");
        assert!(distance_equivalence_constant(&c, &s, &[]).is_err());
    }
}
