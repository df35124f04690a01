use super::crossings::Link;
use super::Lattice;
use crate::error::{Error, Result};

/// Discrete Dirichlet problem on a lattice.
///
/// `values` holds fixed values at fixed nodes, the initial guess at free nodes
/// and NaN elsewhere. `links[k]` are the E, W, N, S arms of `free[k]`.
#[derive(Clone, Debug)]
pub(crate) struct DirichletProblem {
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub free: Vec<usize>,
    pub links: Vec<[Link; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SolveStats {
    pub sweeps: usize,
    pub residual: f64,
    pub omega: f64,
}

/// Red-black SOR on the Shortley-Weller five-point Laplacian.
///
/// The relaxation factor is the optimal one for a square of the free region's
/// extent. Iterates until the largest Gauss-Seidel correction in a sweep is at
/// most `tol`.
pub(crate) fn solve_dirichlet(p: DirichletProblem, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let DirichletProblem { lattice, mut values, free, links } = p;
    let nf = free.len();
    if nf == 0 {
        return Ok((values, SolveStats { sweeps: 0, residual: 0.0, omega: 1.0 }));
    }
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by_key(|&k| {
        let (i, j) = lattice.coords(free[k]);
        ((i + j) % 2, free[k])
    });

    let mut idx = Vec::with_capacity(nf);
    let mut nb = Vec::with_capacity(nf);
    let mut w = Vec::with_capacity(nf);
    let mut rhs = Vec::with_capacity(nf);
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for &k in &order {
        let node = free[k];
        let (i, j) = lattice.coords(node);
        imin = imin.min(i);
        imax = imax.max(i);
        jmin = jmin.min(j);
        jmax = jmax.max(j);
        let th: Vec<f64> = links[k]
            .iter()
            .map(|l| match l {
                Link::Node(_) => 1.0,
                Link::Boundary { theta, .. } => *theta,
            })
            .collect();
        let a = [
            2.0 / (th[0] * (th[0] + th[1])),
            2.0 / (th[1] * (th[0] + th[1])),
            2.0 / (th[2] * (th[2] + th[3])),
            2.0 / (th[3] * (th[2] + th[3])),
        ];
        let sum: f64 = a.iter().sum();
        let mut nbk = [node as u32; 4];
        let mut wk = [0.0; 4];
        let mut r = 0.0;
        for d in 0..4 {
            match links[k][d] {
                Link::Node(m) => {
                    nbk[d] = m as u32;
                    wk[d] = a[d] / sum;
                }
                Link::Boundary { value, .. } => r += a[d] / sum * value,
            }
        }
        idx.push(node as u32);
        nb.push(nbk);
        w.push(wk);
        rhs.push(r);
    }
    let extent = (imax - imin).max(jmax - jmin) + 2;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / extent as f64).sin());
    let max_sweeps = 100 * extent + 5000;

    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        residual = 0.0;
        for k in 0..nf {
            let [a, b, c, d] = nb[k];
            let [wa, wb, wc, wd] = w[k];
            let gs = rhs[k]
                + wa * values[a as usize]
                + wb * values[b as usize]
                + wc * values[c as usize]
                + wd * values[d as usize];
            let me = idx[k] as usize;
            let delta = gs - values[me];
            residual = residual.max(delta.abs());
            values[me] += omega * delta;
        }
        if residual <= tol {
            return Ok((values, SolveStats { sweeps: sweep, residual, omega }));
        }
    }
    Err(Error::NotConverged { iterations: max_sweeps, residual })
}
