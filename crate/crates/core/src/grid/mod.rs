//! Cell-centred grids, boundary crossings, and the Dirichlet relaxation solver.

mod crossings;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub(crate) use crossings::{CurveCrossings, Dir, DomainGrid, Link};
pub(crate) use solver::{solve_dirichlet, DirichletProblem};

/// Square cell-centred lattice: node `(i, j)` sits at
/// `(x0 + (i + ½)h, y0 + (j + ½)h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub n: usize,
}

impl Lattice {
    /// Square lattice of `n × n` cells covering `bbox` with a 2% margin.
    pub fn covering(bbox: [f64; 4], n: usize) -> Self {
        let w = bbox[2] - bbox[0];
        let hgt = bbox[3] - bbox[1];
        let side = w.max(hgt) * 1.02;
        let cx = 0.5 * (bbox[0] + bbox[2]);
        let cy = 0.5 * (bbox[1] + bbox[3]);
        Lattice { x0: cx - 0.5 * side, y0: cy - 0.5 * side, h: side / n as f64, n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        C64::new(self.x(i), self.y(j))
    }

    pub fn node_at(&self, idx: usize) -> C64 {
        let (i, j) = self.coords(idx);
        self.node(i, j)
    }

    /// Index of the node nearest to `z`, if `z` lies in the lattice box.
    pub fn nearest(&self, z: C64) -> Option<usize> {
        let fi = ((z.re - self.x0) / self.h).floor();
        let fj = ((z.im - self.y0) / self.h).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.n as f64 || fj >= self.n as f64 {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    /// Indices of the 4-neighbours of `idx`.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.coords(idx);
        let n = self.n;
        let mut out = [usize::MAX; 4];
        if i + 1 < n {
            out[0] = idx + 1;
        }
        if i > 0 {
            out[1] = idx - 1;
        }
        if j + 1 < n {
            out[2] = idx + n;
        }
        if j > 0 {
            out[3] = idx - n;
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }
}

/// Sampled scalar field on the cells of a square grid, restricted to a domain.
///
/// Cells outside the domain carry no value. Serializes with `null` for
/// outside cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct MeasureGrid {
    lattice: Lattice,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    lower: [f64; 2],
    upper: [f64; 2],
    resolution: usize,
    spacing: f64,
    values: Vec<Option<f64>>,
}

impl From<MeasureGrid> for GridRepr {
    fn from(g: MeasureGrid) -> Self {
        let l = g.lattice;
        GridRepr {
            lower: [l.x0, l.y0],
            upper: [l.x0 + l.h * l.n as f64, l.y0 + l.h * l.n as f64],
            resolution: l.n,
            spacing: l.h,
            values: g.values.iter().map(|v| if v.is_nan() { None } else { Some(*v) }).collect(),
        }
    }
}

impl TryFrom<GridRepr> for MeasureGrid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.values.len() != r.resolution * r.resolution || r.resolution == 0 {
            return Err(Error::invalid("grid values do not match the resolution"));
        }
        if !(r.spacing > 0.0 && r.spacing.is_finite()) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let lattice = Lattice { x0: r.lower[0], y0: r.lower[1], h: r.spacing, n: r.resolution };
        let values = r.values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(MeasureGrid { lattice, values })
    }
}

impl MeasureGrid {
    /// `values` uses NaN for outside cells.
    pub fn from_values(lattice: Lattice, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), lattice.len());
        MeasureGrid { lattice, values }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn resolution(&self) -> usize {
        self.lattice.n
    }

    pub fn lower(&self) -> C64 {
        C64::new(self.lattice.x0, self.lattice.y0)
    }

    pub fn upper(&self) -> C64 {
        let s = self.lattice.h * self.lattice.n as f64;
        C64::new(self.lattice.x0 + s, self.lattice.y0 + s)
    }

    /// Raw values with NaN marking outside cells.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.at(self.lattice.index(i, j))
    }

    pub fn at(&self, idx: usize) -> Option<f64> {
        let v = self.values[idx];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        !self.values[idx].is_nan()
    }

    pub fn inside_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// `(index, node, value)` over inside cells.
    pub fn iter_inside(&self) -> impl Iterator<Item = (usize, C64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(k, v)| (k, self.lattice.node_at(k), *v))
    }

    /// Bilinear interpolation over inside cells; corners outside the domain
    /// are dropped and the remaining weights renormalized.
    pub fn value_at(&self, z: C64) -> Option<f64> {
        let l = &self.lattice;
        let fi = (z.re - l.x0) / l.h - 0.5;
        let fj = (z.im - l.y0) / l.h - 0.5;
        let i0 = fi.floor();
        let j0 = fj.floor();
        let (ti, tj) = (fi - i0, fj - j0);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (di, wi) in [(0i64, 1.0 - ti), (1, ti)] {
            for (dj, wj) in [(0i64, 1.0 - tj), (1, tj)] {
                let ii = i0 as i64 + di;
                let jj = j0 as i64 + dj;
                if ii < 0 || jj < 0 || ii >= l.n as i64 || jj >= l.n as i64 {
                    continue;
                }
                let v = self.values[l.index(ii as usize, jj as usize)];
                let w = wi * wj;
                if !v.is_nan() && w > 0.0 {
                    acc += w * v;
                    wsum += w;
                }
            }
        }
        (wsum > 0.0).then(|| acc / wsum)
    }

    /// Largest absolute difference over cells inside both grids.
    pub fn max_abs_diff(&self, other: &MeasureGrid) -> Result<f64> {
        if self.lattice != other.lattice {
            return Err(Error::invalid("grids live on different lattices"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with header `x,y,value`, outside cells omitted.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for (_, z, v) in self.iter_inside() {
            s.push_str(&format!("{},{},{}\n", z.re, z.im, v));
        }
        s
    }
}

/// Builds a Dirichlet problem on the `active` nodes of `dg`.
///
/// Active nodes with a finite `fixed` value are held at that value; the other
/// active nodes are free and start at `init`. Arms crossing the domain
/// boundary or an `extra` curve end there; arms reaching an inside node that
/// is not active are resolved by `cut`.
pub(crate) fn assemble(
    dg: &DomainGrid,
    active: &[bool],
    fixed: &[f64],
    extra: &[&CurveCrossings],
    mut cut: impl FnMut(usize, usize) -> Link,
    init: f64,
) -> DirichletProblem {
    let lattice = dg.lattice;
    let mut values = vec![f64::NAN; lattice.len()];
    let mut free = Vec::new();
    let mut links = Vec::new();
    for idx in 0..lattice.len() {
        if !active[idx] {
            continue;
        }
        if fixed[idx].is_finite() {
            values[idx] = fixed[idx];
            continue;
        }
        values[idx] = init;
        let mut arms = [Link::Node(idx); 4];
        for (d, dir) in Dir::ALL.iter().enumerate() {
            arms[d] = match dg.link(idx, *dir, extra) {
                Link::Node(nb) if !active[nb] => cut(idx, nb),
                other => other,
            };
        }
        free.push(idx);
        links.push(arms);
    }
    DirichletProblem { lattice, values, free, links }
}

/// Boolean cell mask aligned to a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMask {
    pub lattice: Lattice,
    pub cells: Vec<bool>,
}

impl GridMask {
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// CSV `x,y,mask` over all cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,mask\n");
        for (k, &b) in self.cells.iter().enumerate() {
            let z = self.lattice.node_at(k);
            s.push_str(&format!("{},{},{}\n", z.re, z.im, u8::from(b)));
        }
        s
    }
}

/// 4-connected component of `mask` containing `seed`.
pub fn component(lattice: &Lattice, mask: &[bool], seed: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    if !mask[seed] {
        return out;
    }
    out[seed] = true;
    let mut stack = vec![seed];
    while let Some(k) = stack.pop() {
        for nb in lattice.neighbors(k) {
            if mask[nb] && !out[nb] {
                out[nb] = true;
                stack.push(nb);
            }
        }
    }
    out
}

/// Number of 4-connected components of `mask`.
pub fn count_components(lattice: &Lattice, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(k) = stack.pop() {
            for nb in lattice.neighbors(k) {
                if mask[nb] && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    count
}
