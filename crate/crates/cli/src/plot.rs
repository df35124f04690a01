//! Plot data: SVG level curves of measure grids and CSV exports of reports.

use std::fmt::Write as _;

use crosslab::cross::BoundReport;
use crosslab::MeasureGrid;

use crate::CliError;

/// Canvas size of the SVG in pixels.
const CANVAS: f64 = 512.0;

type Segment = [(f64, f64); 2];

/// Marching-squares segments of `{value = level}` over lattice squares whose
/// four nodes are inside the domain.
pub fn level_segments(grid: &MeasureGrid, level: f64) -> Vec<Segment> {
    let l = grid.lattice();
    let n = l.n;
    let mut segs = Vec::new();
    for j in 0..n.saturating_sub(1) {
        for i in 0..n.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Option<Vec<f64>> = corners.iter().map(|&(a, b)| grid.get(a, b)).collect();
            let Some(v) = vals else { continue };
            let pts: Vec<(f64, f64)> = corners.iter().map(|&(a, b)| (l.x(a), l.y(b))).collect();
            // Crossing points on the four edges, in edge order.
            let mut cross = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (v[a] < level) != (v[b] < level) {
                    let t = (level - v[a]) / (v[b] - v[a]);
                    cross.push((pts[a].0 + t * (pts[b].0 - pts[a].0), pts[a].1 + t * (pts[b].1 - pts[a].1)));
                }
            }
            match cross.len() {
                2 => segs.push([cross[0], cross[1]]),
                4 => {
                    // Saddle: decide by the centre value.
                    let centre = v.iter().sum::<f64>() / 4.0;
                    if (centre < level) == (v[0] < level) {
                        segs.push([cross[0], cross[3]]);
                        segs.push([cross[1], cross[2]]);
                    } else {
                        segs.push([cross[0], cross[1]]);
                        segs.push([cross[2], cross[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// SVG with one path per level; the y axis points up.
pub fn grid_svg(grid: &MeasureGrid, levels: &[f64]) -> Result<String, CliError> {
    if grid.inside_count() == 0 {
        return Err(CliError::Validation("cannot plot an empty grid".into()));
    }
    let (lo, hi) = (grid.lower(), grid.upper());
    let scale = CANVAS / (hi.re - lo.re).max(hi.im - lo.im);
    let map = |(x, y): (f64, f64)| ((x - lo.re) * scale, (hi.im - y) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &level in levels {
        let mut d = String::new();
        for [a, b] in level_segments(grid, level) {
            let (a, b) = (map(a), map(b));
            let _ = write!(d, "M{:.3} {:.3}L{:.3} {:.3}", a.0, a.1, b.0, b.1);
        }
        let shade = (255.0 * (1.0 - level.clamp(0.0, 1.0))) as u8;
        let _ = writeln!(
            s,
            r#"<path data-level="{level}" stroke="rgb({shade},0,{})" stroke-width="1" fill="none" d="{d}"/>"#,
            255 - shade
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Bound report rows as CSV, most violated first.
pub fn report_csv(report: &BoundReport) -> Result<String, CliError> {
    if report.rows.is_empty() {
        return Err(CliError::Validation("cannot export an empty report".into()));
    }
    let mut sorted = report.clone();
    sorted.rows.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok(sorted.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crosslab::pshmeasure::boundary_measure;
    use crosslab::{BoundaryArcSet, MeasureMethod, PlanarDomain};

    #[test]
    fn half_arc_levels() {
        let g = boundary_measure(&PlanarDomain::unit_disk(), &BoundaryArcSet::upper_half(), MeasureMethod::Grid, 48)
            .unwrap();
        // The ω = 1/2 level of the half arc is the real diameter.
        let segs = level_segments(&g, 0.5);
        assert!(!segs.is_empty());
        for [a, b] in &segs {
            assert!(a.1.abs() < 0.05 && b.1.abs() < 0.05, "{a:?} {b:?}");
        }
        let levels: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        let svg = grid_svg(&g, &levels).unwrap();
        assert_eq!(svg.matches("<path").count(), 9);
        assert!(svg.contains(r#"data-level="0.9""#));
    }

    #[test]
    fn empty_inputs_are_errors() {
        let l = crosslab::grid::Lattice::covering([0.0, 0.0, 1.0, 1.0], 4);
        let g = MeasureGrid::from_values(l, vec![f64::NAN; 16]);
        assert!(grid_svg(&g, &[0.5]).is_err());
        assert!(report_csv(&BoundReport::new(vec![], 0.0)).is_err());
    }

    #[test]
    fn report_rows_sorted() {
        use crosslab::cross::BoundRow;
        use num_complex::Complex64 as C;
        let row = |r: f64| BoundRow { coords: vec![C::new(r, 0.0)], omega: 0.1, lhs: 1.0, rhs: 1.0 + r, residual: r };
        let rep = BoundReport::new(vec![row(0.3), row(-0.1), row(0.2)], 1e-9);
        let csv = report_csv(&rep).unwrap();
        let res: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(res, ["-0.1", "0.2", "0.3"]);
    }
}
