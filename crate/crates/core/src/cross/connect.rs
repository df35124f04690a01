use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Lattice;

use super::CrossSpec;

pub const MAX_CONNECT_RESOLUTION: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub connected: bool,
    pub components: usize,
    /// Grid cells of `ℂ²` lying in the envelope.
    pub cells: usize,
    pub resolution: usize,
}

/// Inside nodes of one factor with their `ω` values and compressed
/// 4-neighbour lists.
struct FactorNodes {
    values: Vec<f64>,
    neighbors: Vec<Vec<u32>>,
}

fn factor_nodes(f: &super::FactorSpec, resolution: usize) -> Result<FactorNodes> {
    let lattice = Lattice::covering(f.domain.bbox(), resolution);
    let raw: Vec<Option<f64>> = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let z = lattice.node_at(k);
            if f.domain.contains(z) {
                f.omega(z).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut compact = vec![u32::MAX; lattice.len()];
    let mut values = Vec::new();
    for (k, v) in raw.iter().enumerate() {
        if let Some(v) = v {
            compact[k] = values.len() as u32;
            values.push(*v);
        }
    }
    let mut neighbors = vec![Vec::new(); values.len()];
    for (k, &c) in compact.iter().enumerate() {
        if c == u32::MAX {
            continue;
        }
        neighbors[c as usize] = lattice.neighbors(k).map(|m| compact[m]).filter(|&m| m != u32::MAX).collect();
    }
    Ok(FactorNodes { values, neighbors })
}

/// Connectivity of `{ω < 1}` sampled on the product of two `resolution²`
/// grids, with cells adjacent when they differ by one step along one axis.
pub fn envelope_connected(spec: &CrossSpec, resolution: usize) -> Result<Connectivity> {
    if spec.n() != 2 {
        return Err(Error::invalid(format!("connectivity is implemented for N = 2, got N = {}", spec.n())));
    }
    if !(2..=MAX_CONNECT_RESOLUTION).contains(&resolution) {
        return Err(Error::invalid(format!("resolution {resolution} must lie in [2, {MAX_CONNECT_RESOLUTION}]")));
    }
    let a = factor_nodes(&spec.factors[0], resolution)?;
    let b = factor_nodes(&spec.factors[1], resolution)?;
    let nb = b.values.len();
    let total = a.values.len() * nb;
    let inside = |c: usize| a.values[c / nb] + b.values[c % nb] < 1.0;
    let mut seen = vec![0u64; total.div_ceil(64)];
    let mark = |seen: &mut [u64], c: usize| -> bool {
        let (w, bit) = (c / 64, 1u64 << (c % 64));
        let fresh = seen[w] & bit == 0;
        seen[w] |= bit;
        fresh
    };
    let mut components = 0;
    let mut cells = 0;
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..total {
        if !inside(start) || !mark(&mut seen, start) {
            continue;
        }
        components += 1;
        stack.push(start);
        while let Some(c) = stack.pop() {
            cells += 1;
            let (i, j) = (c / nb, c % nb);
            let next = a.neighbors[i]
                .iter()
                .map(|&m| m as usize * nb + j)
                .chain(b.neighbors[j].iter().map(|&m| i * nb + m as usize));
            for d in next {
                if inside(d) && mark(&mut seen, d) {
                    stack.push(d);
                }
            }
        }
    }
    if cells == 0 {
        return Err(Error::Empty("envelope sample".into()));
    }
    Ok(Connectivity { connected: components == 1, components, cells, resolution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::FactorSpec;
    use crate::geometry::BoundaryArcSet;
    use std::f64::consts::PI;

    fn arcs(len: f64) -> FactorSpec {
        FactorSpec::disk_arcs(BoundaryArcSet::new(&[(0.0, len)]).unwrap()).unwrap()
    }

    #[test]
    fn large_arcs_give_one_component() {
        let spec = CrossSpec::new(vec![arcs(1.5 * PI), arcs(1.5 * PI)]).unwrap();
        let c = envelope_connected(&spec, 24).unwrap();
        assert!(c.connected && c.cells > 0, "{c:?}");
    }

    #[test]
    fn resolution_and_dimension_are_checked() {
        let spec = CrossSpec::new(vec![arcs(PI), arcs(PI)]).unwrap();
        assert!(envelope_connected(&spec, 129).is_err());
        let three = CrossSpec::new(vec![arcs(PI), arcs(PI), arcs(PI)]).unwrap();
        assert!(envelope_connected(&three, 16).is_err());
    }

    #[test]
    fn tiny_arcs_leave_an_empty_coarse_sample() {
        // ω ≥ 1 − 0.01 away from a thin collar, so two factors sum above 1
        // on every coarse cell.
        let spec = CrossSpec::new(vec![arcs(0.02), arcs(0.02)]).unwrap();
        assert!(matches!(envelope_connected(&spec, 8), Err(Error::Empty(_))));
    }
}
