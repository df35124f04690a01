use std::f64::consts::TAU;

use super::Lattice;
use crate::geometry::{BoundaryArcSet, PlanarDomain};

/// Intersection of a boundary curve with a grid line.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Crossing {
    /// Coordinate along the grid line (x for rows, y for columns).
    pub pos: f64,
    /// Curve parameter.
    pub t: f64,
    /// Dirichlet value carried by links ending at this crossing.
    pub value: f64,
}

/// All crossings of one closed curve with the rows and columns of a lattice,
/// sorted along each line.
#[derive(Clone, Debug)]
pub(crate) struct CurveCrossings {
    pub rows: Vec<Vec<Crossing>>,
    pub cols: Vec<Vec<Crossing>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Dir {
    E,
    W,
    N,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::W, Dir::N, Dir::S];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Link {
    Node(usize),
    /// Boundary at fraction `theta` of the grid spacing, carrying `value`.
    Boundary { theta: f64, value: f64 },
}

/// Smallest arm fraction admitted in the stencil.
const MIN_THETA: f64 = 1e-8;

impl CurveCrossings {
    pub fn compute(lattice: &Lattice, domain: &PlanarDomain) -> Self {
        let n = lattice.n;
        let m = (8 * n).max(4096);
        let samples: Vec<(f64, num_complex::Complex64)> = domain.sample_boundary(m);
        let mut rows = vec![Vec::new(); n];
        let mut cols = vec![Vec::new(); n];
        for k in 0..m {
            let (ta, pa) = samples[k];
            let (tb, pb) = if k + 1 < m { samples[k + 1] } else { (TAU, samples[0].1) };
            // Rows: horizontal lines y = y_j.
            let (lo, hi) = (pa.im.min(pb.im), pa.im.max(pb.im));
            let j_lo = ((lo - lattice.y0) / lattice.h - 0.5).ceil().max(0.0) as usize;
            let j_hi = ((hi - lattice.y0) / lattice.h - 0.5).floor();
            if j_hi >= 0.0 {
                for j in j_lo..=(j_hi as usize).min(n - 1) {
                    let y = lattice.y(j);
                    if (pa.im <= y) != (pb.im <= y) {
                        let t = refine(domain, ta, tb, pa.im, pb.im, y, true);
                        rows[j].push(Crossing { pos: domain.point(t).re, t: t.rem_euclid(TAU), value: 1.0 });
                    }
                }
            }
            let (lo, hi) = (pa.re.min(pb.re), pa.re.max(pb.re));
            let i_lo = ((lo - lattice.x0) / lattice.h - 0.5).ceil().max(0.0) as usize;
            let i_hi = ((hi - lattice.x0) / lattice.h - 0.5).floor();
            if i_hi >= 0.0 {
                for i in i_lo..=(i_hi as usize).min(n - 1) {
                    let x = lattice.x(i);
                    if (pa.re <= x) != (pb.re <= x) {
                        let t = refine(domain, ta, tb, pa.re, pb.re, x, false);
                        cols[i].push(Crossing { pos: domain.point(t).im, t: t.rem_euclid(TAU), value: 1.0 });
                    }
                }
            }
        }
        for line in rows.iter_mut().chain(cols.iter_mut()) {
            line.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        }
        CurveCrossings { rows, cols }
    }

    /// Inside mask by crossing parity along rows.
    pub fn inside_mask(&self, lattice: &Lattice) -> Vec<bool> {
        let n = lattice.n;
        let mut mask = vec![false; n * n];
        for j in 0..n {
            let row = &self.rows[j];
            let mut k = 0;
            for i in 0..n {
                let x = lattice.x(i);
                while k < row.len() && row[k].pos < x {
                    k += 1;
                }
                mask[lattice.index(i, j)] = k % 2 == 1;
            }
        }
        mask
    }

    pub fn set_constant(&mut self, value: f64) {
        for c in self.rows.iter_mut().chain(self.cols.iter_mut()).flatten() {
            c.value = value;
        }
    }

    /// Sets each crossing's value from its curve parameter.
    pub fn set_values(&mut self, f: impl Fn(f64) -> f64) {
        for c in self.rows.iter_mut().chain(self.cols.iter_mut()).flatten() {
            c.value = f(c.t);
        }
    }

    /// Each crossing receives the fraction of its parameter cell lying in
    /// `∂D ∖ A`. The cell of a crossing runs between the midpoints to its
    /// neighbours in parameter order, so crossings away from arc endpoints get
    /// exactly 0 or 1.
    pub fn assign_arc_values(&mut self, arcs: &BoundaryArcSet) {
        let mut ts: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (li, line) in self.rows.iter().enumerate() {
            for (k, c) in line.iter().enumerate() {
                ts.push((c.t, 0, li, k));
            }
        }
        for (li, line) in self.cols.iter().enumerate() {
            for (k, c) in line.iter().enumerate() {
                ts.push((c.t, 1, li, k));
            }
        }
        if ts.is_empty() {
            return;
        }
        ts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = ts.len();
        for idx in 0..m {
            let t = ts[idx].0;
            let prev = if idx == 0 { ts[m - 1].0 - TAU } else { ts[idx - 1].0 };
            let next = if idx + 1 == m { ts[0].0 + TAU } else { ts[idx + 1].0 };
            let lo = 0.5 * (prev + t);
            let hi = 0.5 * (t + next);
            let value = if hi > lo {
                (1.0 - arcs.overlap(lo, hi) / (hi - lo)).clamp(0.0, 1.0)
            } else if arcs.contains(t) {
                0.0
            } else {
                1.0
            };
            let (_, kind, li, k) = ts[idx];
            if kind == 0 {
                self.rows[li][k].value = value;
            } else {
                self.cols[li][k].value = value;
            }
        }
    }

    /// Nearest crossing strictly beyond node `(i, j)` in direction `dir` and
    /// within one grid spacing, as `(theta, crossing)`.
    pub fn nearest(&self, lattice: &Lattice, i: usize, j: usize, dir: Dir) -> Option<(f64, Crossing)> {
        let (line, origin) = match dir {
            Dir::E | Dir::W => (&self.rows[j], lattice.x(i)),
            Dir::N | Dir::S => (&self.cols[i], lattice.y(j)),
        };
        let k = line.partition_point(|c| c.pos <= origin);
        let h = lattice.h;
        match dir {
            Dir::E | Dir::N => line.get(k).and_then(|c| {
                let d = c.pos - origin;
                (d <= h).then(|| ((d / h).max(MIN_THETA), *c))
            }),
            Dir::W | Dir::S => {
                let k2 = line.partition_point(|c| c.pos < origin);
                if k2 == 0 {
                    return None;
                }
                let c = line[k2 - 1];
                let d = origin - c.pos;
                (d <= h).then(|| ((d / h).max(MIN_THETA), c))
            }
        }
    }

    /// Value of the crossing closest to `(i, j)` along its row.
    fn closest_value(&self, lattice: &Lattice, i: usize, j: usize) -> f64 {
        let x = lattice.x(i);
        self.rows[j]
            .iter()
            .min_by(|a, b| (a.pos - x).abs().total_cmp(&(b.pos - x).abs()))
            .map(|c| c.value)
            .unwrap_or(1.0)
    }
}

/// Solves `coord(γ(t)) = target` on `[ta, tb]` by safeguarded Newton, starting
/// from linear interpolation of the polyline segment.
fn refine(domain: &PlanarDomain, ta: f64, tb: f64, va: f64, vb: f64, target: f64, y: bool) -> f64 {
    let coord = |p: num_complex::Complex64| if y { p.im } else { p.re };
    let mut lo = ta;
    let mut hi = tb;
    let mut f_lo = va - target;
    let mut t = if vb != va { ta + (tb - ta) * (target - va) / (vb - va) } else { 0.5 * (ta + tb) };
    for _ in 0..40 {
        let (p, d, _) = domain.eval(t);
        let f = coord(p) - target;
        if f == 0.0 {
            return t;
        }
        if (f < 0.0) == (f_lo < 0.0) {
            lo = t;
            f_lo = f;
        } else {
            hi = t;
        }
        let df = coord(d);
        let mut next = if df != 0.0 { t - f / df } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < 1e-16 * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    t
}

/// Lattice over a domain with its boundary crossings and inside mask.
#[derive(Clone, Debug)]
pub(crate) struct DomainGrid {
    pub lattice: Lattice,
    pub crossings: CurveCrossings,
    pub inside: Vec<bool>,
}

impl DomainGrid {
    pub fn new(domain: &PlanarDomain, n: usize) -> Self {
        Self::with_lattice(domain, Lattice::covering(domain.bbox(), n))
    }

    pub fn with_lattice(domain: &PlanarDomain, lattice: Lattice) -> Self {
        let crossings = CurveCrossings::compute(&lattice, domain);
        let inside = crossings.inside_mask(&lattice);
        DomainGrid { lattice, crossings, inside }
    }

    fn neighbor(&self, idx: usize, dir: Dir) -> Option<usize> {
        let (i, j) = self.lattice.coords(idx);
        let n = self.lattice.n;
        match dir {
            Dir::E => (i + 1 < n).then(|| idx + 1),
            Dir::W => (i > 0).then(|| idx - 1),
            Dir::N => (j + 1 < n).then(|| idx + n),
            Dir::S => (j > 0).then(|| idx - n),
        }
    }

    /// Stencil arm from inside node `idx`: the nearest crossing of the domain
    /// boundary or of any `extra` curve within one spacing, else the
    /// neighbouring node.
    pub fn link(&self, idx: usize, dir: Dir, extra: &[&CurveCrossings]) -> Link {
        let (i, j) = self.lattice.coords(idx);
        let mut best: Option<(f64, f64)> = None;
        for cc in std::iter::once(&self.crossings).chain(extra.iter().copied()) {
            if let Some((theta, c)) = cc.nearest(&self.lattice, i, j, dir) {
                if best.is_none_or(|(b, _)| theta < b) {
                    best = Some((theta, c.value));
                }
            }
        }
        if let Some((theta, value)) = best {
            return Link::Boundary { theta, value };
        }
        match self.neighbor(idx, dir) {
            Some(nb) if self.inside[nb] => Link::Node(nb),
            _ => Link::Boundary { theta: 1.0, value: self.crossings.closest_value(&self.lattice, i, j) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn disk_mask_matches_membership() {
        let d = PlanarDomain::make_disk(C64::new(0.1, -0.2), 0.8).unwrap();
        let g = DomainGrid::new(&d, 64);
        for idx in 0..g.lattice.len() {
            let z = g.lattice.node_at(idx);
            let r = (z - C64::new(0.1, -0.2)).norm();
            if (r - 0.8).abs() > 1e-12 {
                assert_eq!(g.inside[idx], r < 0.8, "{z}");
            }
        }
    }

    #[test]
    fn crossings_lie_on_the_curve() {
        let e = PlanarDomain::ellipse(2.0, 1.0).unwrap();
        let g = DomainGrid::new(&e, 50);
        for (j, row) in g.crossings.rows.iter().enumerate() {
            assert_eq!(row.len() % 2, 0);
            for c in row {
                let p = e.point(c.t);
                assert!((p.im - g.lattice.y(j)).abs() < 1e-13);
                assert!((p.re - c.pos).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn arc_values_are_fractional_only_at_endpoints() {
        let d = PlanarDomain::unit_disk();
        let mut g = DomainGrid::new(&d, 64);
        g.crossings.assign_arc_values(&BoundaryArcSet::upper_half());
        let mut fractional = 0;
        for c in g.crossings.rows.iter().chain(g.crossings.cols.iter()).flatten() {
            if c.value > 0.0 && c.value < 1.0 {
                fractional += 1;
            } else if c.t > 0.05 && c.t < std::f64::consts::PI - 0.05 {
                assert_eq!(c.value, 0.0);
            }
        }
        // Two endpoints, each can split at most one parameter cell per line family.
        assert!(fractional <= 4, "{fractional}");
    }
}
