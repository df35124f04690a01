use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::C64;

/// Number of boundary samples used by the simplicity and tangent-ball checks.
pub const N_CHECK: usize = 4096;

/// JSON form of a planar domain.
///
/// Trigonometric rows are `[ax_k, bx_k, ay_k, by_k]` for `k = 0, 1, ...` with
/// `x(t) = Σ ax_k cos kt + bx_k sin kt` and likewise for `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainDescriptor {
    Disk { center: [f64; 2], radius: f64 },
    Trig { coeffs: Vec<[f64; 4]> },
}

#[derive(Clone, Debug, PartialEq)]
struct TrigCurve {
    coeffs: Vec<[f64; 4]>,
}

impl TrigCurve {
    /// Point, first and second derivative at `t`.
    fn eval(&self, t: f64) -> (C64, C64, C64) {
        let step = C64::new(t.cos(), t.sin());
        let mut e = C64::new(1.0, 0.0);
        let (mut x, mut y, mut dx, mut dy, mut ddx, mut ddy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, row) in self.coeffs.iter().enumerate() {
            if k > 0 {
                // Re-anchor periodically so rotation error does not accumulate.
                e = if k % 32 == 0 {
                    let a = k as f64 * t;
                    C64::new(a.cos(), a.sin())
                } else {
                    e * step
                };
            }
            let (c, s) = (e.re, e.im);
            let kf = k as f64;
            let [ax, bx, ay, by] = *row;
            x += ax * c + bx * s;
            y += ay * c + by * s;
            dx += kf * (bx * c - ax * s);
            dy += kf * (by * c - ay * s);
            ddx -= kf * kf * (ax * c + bx * s);
            ddy -= kf * kf * (ay * c + by * s);
        }
        (C64::new(x, y), C64::new(dx, dy), C64::new(ddx, ddy))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Disk { center: C64, radius: f64 },
    Trig(TrigCurve),
}

/// Nearest boundary point of a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    /// Euclidean distance to the boundary curve.
    pub dist: f64,
    /// Parameter of the nearest point.
    pub t: f64,
    pub point: C64,
    /// True when the query lies in the open domain.
    pub inside: bool,
}

/// A C² Jordan domain in the plane.
#[derive(Clone, Debug)]
pub struct PlanarDomain {
    shape: Shape,
    ccw: bool,
    curvature_bound: f64,
    diameter: f64,
    bbox: [f64; 4],
    poly: Arc<Polyline>,
    tangent_radius: OnceLock<f64>,
}

impl PartialEq for PlanarDomain {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
    }
}

impl Serialize for PlanarDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlanarDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = DomainDescriptor::deserialize(d)?;
        PlanarDomain::from_descriptor(&desc).map_err(serde::de::Error::custom)
    }
}

impl PlanarDomain {
    pub fn make_disk(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry(format!("disk radius must be positive, got {radius}")));
        }
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::Geometry("disk center must be finite".into()));
        }
        let shape = Shape::Disk { center, radius };
        let poly = Polyline::sample(&shape, N_CHECK);
        Ok(PlanarDomain {
            shape,
            ccw: true,
            curvature_bound: 1.0 / radius,
            diameter: 2.0 * radius,
            bbox: [center.re - radius, center.im - radius, center.re + radius, center.im + radius],
            poly: Arc::new(poly),
            tangent_radius: OnceLock::new(),
        })
    }

    /// Builds a smooth Jordan domain from trigonometric coefficient rows
    /// `[ax_k, bx_k, ay_k, by_k]`.
    pub fn make_smooth_domain(coeffs: Vec<[f64; 4]>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Geometry("trigonometric curve needs degree >= 1".into()));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("coefficients must be finite".into()));
        }
        let curve = TrigCurve { coeffs };
        let (p0, _, _) = curve.eval(0.0);
        let (p1, _, _) = curve.eval(TAU);
        if (p0 - p1).norm() > 1e-12 * (1.0 + p0.norm()) {
            return Err(Error::Geometry("curve is not closed".into()));
        }
        let shape = Shape::Trig(curve);
        let poly = Polyline::sample(&shape, N_CHECK);

        let scale = poly.scale();
        let mut kmax: f64 = 0.0;
        for i in 0..N_CHECK {
            let t = poly.params[i];
            let (_, d1, d2) = eval_shape(&shape, t);
            let speed = d1.norm();
            if !(speed > 1e-9 * scale) {
                return Err(Error::Geometry(format!("tangent vanishes near t = {t:.6}")));
            }
            let kappa = (d1.re * d2.im - d1.im * d2.re) / speed.powi(3);
            kmax = kmax.max(kappa.abs());
        }
        if let Some((i, j)) = poly.self_intersection() {
            return Err(Error::Geometry(format!(
                "curve self-intersects between t = {:.6} and t = {:.6}",
                poly.params[i], poly.params[j]
            )));
        }
        let area = poly.signed_area();
        let bbox = poly.bbox();
        let diameter = poly.diameter();
        Ok(PlanarDomain {
            shape,
            ccw: area > 0.0,
            curvature_bound: kmax,
            diameter,
            bbox,
            poly: Arc::new(poly),
            tangent_radius: OnceLock::new(),
        })
    }

    pub fn from_descriptor(desc: &DomainDescriptor) -> Result<Self> {
        match desc {
            DomainDescriptor::Disk { center, radius } => {
                Self::make_disk(C64::new(center[0], center[1]), *radius)
            }
            DomainDescriptor::Trig { coeffs } => Self::make_smooth_domain(coeffs.clone()),
        }
    }

    pub fn descriptor(&self) -> DomainDescriptor {
        match &self.shape {
            Shape::Disk { center, radius } => {
                DomainDescriptor::Disk { center: [center.re, center.im], radius: *radius }
            }
            Shape::Trig(c) => DomainDescriptor::Trig { coeffs: c.coeffs.clone() },
        }
    }

    pub fn unit_disk() -> Self {
        Self::make_disk(C64::new(0.0, 0.0), 1.0).expect("unit disk")
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, centred at the origin.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::make_smooth_domain(vec![[0.0; 4], [a, 0.0, 0.0, b]])
    }

    /// `Some((center, radius))` for disk domains.
    pub fn as_disk(&self) -> Option<(C64, f64)> {
        match self.shape {
            Shape::Disk { center, radius } => Some((center, radius)),
            Shape::Trig(_) => None,
        }
    }

    pub fn is_ccw(&self) -> bool {
        self.ccw
    }

    pub fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `[xmin, ymin, xmax, ymax]` of the boundary samples.
    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn point(&self, t: f64) -> C64 {
        eval_shape(&self.shape, t).0
    }

    /// Point, first and second derivative of the boundary parametrization.
    pub fn eval(&self, t: f64) -> (C64, C64, C64) {
        eval_shape(&self.shape, t)
    }

    /// Signed curvature at parameter `t`.
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d1, d2) = self.eval(t);
        (d1.re * d2.im - d1.im * d2.re) / d1.norm().powi(3)
    }

    /// Unit inward normal at parameter `t`.
    pub fn inward_normal(&self, t: f64) -> C64 {
        let (_, d1, _) = self.eval(t);
        let tangent = d1 / d1.norm();
        if self.ccw {
            tangent * C64::i()
        } else {
            -tangent * C64::i()
        }
    }

    /// Arclength element `|γ'(t)|`.
    pub fn speed(&self, t: f64) -> f64 {
        self.eval(t).1.norm()
    }

    pub fn length(&self) -> f64 {
        let n = 4 * N_CHECK;
        (0..n).map(|i| self.speed(TAU * i as f64 / n as f64)).sum::<f64>() * TAU / n as f64
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Trig(_) => {
                let n = 4 * N_CHECK;
                let s: f64 = (0..n)
                    .map(|i| {
                        let (p, d, _) = self.eval(TAU * i as f64 / n as f64);
                        p.re * d.im - p.im * d.re
                    })
                    .sum();
                (0.5 * s * TAU / n as f64).abs()
            }
        }
    }

    /// Boundary polyline with `n` uniform parameter samples.
    pub fn sample_boundary(&self, n: usize) -> Vec<(f64, C64)> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                (t, self.point(t))
            })
            .collect()
    }

    /// A point well inside the domain (the center for disks).
    pub fn interior_point(&self) -> C64 {
        match self.shape {
            Shape::Disk { center, .. } => center,
            Shape::Trig(_) => {
                // Deepest point of a coarse scan over the bounding box.
                let [x0, y0, x1, y1] = self.bbox;
                let mut best = (f64::NEG_INFINITY, C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)));
                let m = 48;
                for i in 0..m {
                    for j in 0..m {
                        let z = C64::new(
                            x0 + (x1 - x0) * (i as f64 + 0.5) / m as f64,
                            y0 + (y1 - y0) * (j as f64 + 0.5) / m as f64,
                        );
                        let d = self.signed_distance(z);
                        if d > best.0 {
                            best = (d, z);
                        }
                    }
                }
                best.1
            }
        }
    }

    /// Nearest boundary point, distance, and inside flag.
    pub fn boundary_point(&self, z: C64) -> BoundaryPoint {
        match self.shape {
            Shape::Disk { center, radius } => {
                let v = z - center;
                let r = v.norm();
                let t = if r > 0.0 { v.im.atan2(v.re).rem_euclid(TAU) } else { 0.0 };
                BoundaryPoint {
                    dist: (radius - r).abs(),
                    t,
                    point: center + radius * C64::new(t.cos(), t.sin()),
                    inside: r < radius,
                }
            }
            Shape::Trig(_) => self.trig_boundary_point(z),
        }
    }

    fn trig_boundary_point(&self, z: C64) -> BoundaryPoint {
        let poly = &self.poly;
        let (seg, frac, _) = poly.nearest_segment(z);
        let n = poly.params.len();
        let dt = TAU / n as f64;
        let t0 = poly.params[seg] + frac * dt;
        let lo = poly.params[seg] - dt;
        let hi = poly.params[seg] + 2.0 * dt;
        let mut t = t0;
        for _ in 0..30 {
            let (p, d1, d2) = self.eval(t);
            let r = p - z;
            let g = r.re * d1.re + r.im * d1.im;
            let gp = d1.norm_sqr() + r.re * d2.re + r.im * d2.im;
            let step = if gp > 0.0 { -g / gp } else { -g.signum() * 0.25 * dt };
            let next = (t + step).clamp(lo, hi);
            let done = (next - t).abs() < 1e-15 * (1.0 + t.abs());
            t = next;
            if done {
                break;
            }
        }
        let (p, d1, _) = self.eval(t);
        let mut dist = (p - z).norm();
        let mut tt = t;
        let mut pp = p;
        let mut tangent = d1;
        // Guard against Newton leaving the basin: keep the better of the
        // refined point and the polyline vertices.
        for &k in &[seg, (seg + 1) % n] {
            let q = poly.points[k];
            let dq = (q - z).norm();
            if dq < dist {
                dist = dq;
                tt = poly.params[k];
                pp = q;
                tangent = self.eval(tt).1;
            }
        }
        let nrm = if self.ccw { tangent * C64::i() } else { -tangent * C64::i() };
        let side = (z - pp).re * nrm.re + (z - pp).im * nrm.im;
        BoundaryPoint { dist, t: tt.rem_euclid(TAU), point: pp, inside: side > 0.0 }
    }

    /// Distance from `z` to the closure of the boundary arcs `arcs`
    /// (infinite for the empty set).
    pub fn distance_to_arcs(&self, z: C64, arcs: &super::BoundaryArcSet) -> f64 {
        if arcs.is_full() {
            return self.boundary_distance(z);
        }
        let mut best = f64::INFINITY;
        for a in arcs.arcs() {
            let d = match self.shape {
                Shape::Disk { center, radius } => {
                    let v = z - center;
                    let t = if v.norm() > 0.0 { v.im.atan2(v.re) } else { a.midpoint() };
                    if a.contains(t) || v.norm() == 0.0 {
                        (radius - v.norm()).abs()
                    } else {
                        (self.point(a.start) - z).norm().min((self.point(a.end()) - z).norm())
                    }
                }
                Shape::Trig(_) => {
                    let m = 256;
                    let at = |k: usize| a.start + a.len * k as f64 / m as f64;
                    let (kbest, _) = (0..=m)
                        .map(|k| (k, (self.point(at(k)) - z).norm()))
                        .min_by(|x, y| x.1.total_cmp(&y.1))
                        .unwrap();
                    let mut lo = at(kbest.saturating_sub(1));
                    let mut hi = at((kbest + 1).min(m));
                    let f = |t: f64| (self.point(t) - z).norm();
                    let g = 0.5 * (5f64.sqrt() - 1.0);
                    for _ in 0..80 {
                        let m1 = hi - g * (hi - lo);
                        let m2 = lo + g * (hi - lo);
                        if f(m1) < f(m2) {
                            hi = m2;
                        } else {
                            lo = m1;
                        }
                    }
                    f(0.5 * (lo + hi)).min(f(a.start)).min(f(a.end()))
                }
            };
            best = best.min(d);
        }
        best
    }

    /// Distance to the boundary curve.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        self.boundary_point(z).dist
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, z: C64) -> f64 {
        let b = self.boundary_point(z);
        if b.inside {
            b.dist
        } else {
            -b.dist
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, z: C64) -> bool {
        self.boundary_point(z).inside
    }

    /// Radius `r` such that internal and external tangent disks of radius `r`
    /// fit at every sampled boundary point.
    ///
    /// The candidate starts at `1/curvature_bound` and shrinks by 10% until the
    /// sampling verifier accepts it.
    pub fn tangent_ball_radius(&self) -> f64 {
        *self.tangent_radius.get_or_init(|| match self.shape {
            Shape::Disk { radius, .. } => radius,
            Shape::Trig(_) => {
                let mut r = 1.0 / self.curvature_bound;
                for _ in 0..200 {
                    if self.verify_tangent_balls(r, N_CHECK) {
                        return r;
                    }
                    r *= 0.9;
                }
                r
            }
        })
    }

    /// Sampling verifier: at `n` boundary points the disks of radius `r`
    /// centred on `±r·normal` meet the boundary only at the base point, up to
    /// `1e-9`.
    pub fn verify_tangent_balls(&self, r: f64, n: usize) -> bool {
        if !(r > 0.0) {
            return false;
        }
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let p = self.point(t);
            let nu = self.inward_normal(t);
            for c in [p + r * nu, p - r * nu] {
                if self.boundary_distance(c) < r - 1e-9 {
                    return false;
                }
            }
        }
        true
    }
}

fn eval_shape(shape: &Shape, t: f64) -> (C64, C64, C64) {
    match shape {
        Shape::Disk { center, radius } => {
            let e = C64::new(t.cos(), t.sin());
            (center + radius * e, radius * e * C64::i(), -radius * e)
        }
        Shape::Trig(c) => c.eval(t),
    }
}

/// Uniform-parameter boundary polyline with a bounding-volume hierarchy for
/// nearest-segment queries.
#[derive(Clone, Debug)]
struct Polyline {
    params: Vec<f64>,
    points: Vec<C64>,
    nodes: Vec<BvhNode>,
}

#[derive(Clone, Debug)]
struct BvhNode {
    bbox: [f64; 4],
    lo: usize,
    hi: usize,
    children: Option<(usize, usize)>,
}

const LEAF: usize = 8;

impl Polyline {
    fn sample(shape: &Shape, n: usize) -> Self {
        let params: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let points = params.iter().map(|&t| eval_shape(shape, t).0).collect();
        let mut p = Polyline { params, points, nodes: Vec::new() };
        p.build(0, n);
        p
    }

    fn seg(&self, i: usize) -> (C64, C64) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for i in lo..hi {
            let (a, b) = self.seg(i);
            for q in [a, b] {
                bb[0] = bb[0].min(q.re);
                bb[1] = bb[1].min(q.im);
                bb[2] = bb[2].max(q.re);
                bb[3] = bb[3].max(q.im);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(BvhNode { bbox: bb, lo, hi, children: None });
        if hi - lo > LEAF {
            let mid = (lo + hi) / 2;
            let l = self.build(lo, mid);
            let r = self.build(mid, hi);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    fn scale(&self) -> f64 {
        let b = self.bbox();
        (b[2] - b[0]).max(b[3] - b[1]).max(1e-300)
    }

    fn bbox(&self) -> [f64; 4] {
        self.nodes[0].bbox
    }

    fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.re * b.im - a.im * b.re
            })
            .sum::<f64>()
            * 0.5
    }

    fn diameter(&self) -> f64 {
        let stride = (self.points.len() / 512).max(1);
        let pts: Vec<C64> = self.points.iter().step_by(stride).copied().collect();
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d = d.max((pts[i] - pts[j]).norm());
            }
        }
        d
    }

    /// Nearest segment index, fraction along it, and squared distance.
    fn nearest_segment(&self, z: C64) -> (usize, f64, f64) {
        let mut best = (0usize, 0.0f64, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(&node.bbox, z) >= best.2 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let dl = box_dist2(&self.nodes[l].bbox, z);
                    let dr = box_dist2(&self.nodes[r].bbox, z);
                    if dl < dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for i in node.lo..node.hi {
                        let (a, b) = self.seg(i);
                        let (s, d2) = point_segment(z, a, b);
                        if d2 < best.2 {
                            best = (i, s, d2);
                        }
                    }
                }
            }
        }
        best
    }

    /// First pair of non-adjacent intersecting segments, if any.
    fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.points.len();
        let mut order: Vec<(f64, f64, usize)> = (0..n)
            .map(|i| {
                let (a, b) = self.seg(i);
                (a.re.min(b.re), a.re.max(b.re), i)
            })
            .collect();
        order.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (k, &(_, xmax, i)) in order.iter().enumerate() {
            for &(xmin2, _, j) in &order[k + 1..] {
                if xmin2 > xmax {
                    break;
                }
                let adjacent = (i + 1) % n == j || (j + 1) % n == i || i == j;
                if adjacent {
                    continue;
                }
                let (a, b) = self.seg(i);
                let (c, d) = self.seg(j);
                if segments_intersect(a, b, c, d) {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }
}

fn box_dist2(b: &[f64; 4], z: C64) -> f64 {
    let dx = (b[0] - z.re).max(0.0).max(z.re - b[2]);
    let dy = (b[1] - z.im).max(0.0).max(z.im - b[3]);
    dx * dx + dy * dy
}

fn point_segment(z: C64, a: C64, b: C64) -> (f64, f64) {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let s = if l2 > 0.0 {
        (((z - a).re * ab.re + (z - a).im * ab.im) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = a + ab * s;
    (s, (z - q).norm_sqr())
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: C64, q: C64, r: C64| {
        cross(q - p, r - p) == 0.0
            && r.re >= p.re.min(q.re)
            && r.re <= p.re.max(q.re)
            && r.im >= p.im.min(q.im)
            && r.im <= p.im.max(q.im)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}
