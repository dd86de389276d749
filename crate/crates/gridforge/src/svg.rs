//! SVG rendering of grid coordinate lines, node markers, and the psi0,
//! psi1 and psi = 0 flux contours.

use std::fmt::Write;

use crate::error::Result;
use crate::flux::AnalyticField;
use crate::gridfile::GridFile;

const WIDTH: f64 = 900.0;

/// Render both coordinate-line families of a grid (every `stride`-th line)
/// plus the boundary contours. Output is deterministic for a fixed input.
pub fn emit_svg(grid: &GridFile, stride: usize) -> Result<String> {
    let stride = stride.max(1);
    let (n1, n2) = (grid.n1, grid.n2);
    let xs = &grid.arrays.x;
    let ys = &grid.arrays.y;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n1 * n2 {
        x_lo = x_lo.min(xs[k]);
        x_hi = x_hi.max(xs[k]);
        y_lo = y_lo.min(ys[k]);
        y_hi = y_hi.max(ys[k]);
    }
    let margin = 0.08 * (x_hi - x_lo).max(y_hi - y_lo).max(1e-30);
    x_lo -= margin;
    x_hi += margin;
    y_lo -= margin;
    y_hi += margin;
    let scale = WIDTH / (x_hi - x_lo);
    let height = (y_hi - y_lo) * scale;
    let px = |x: f64| (x - x_lo) * scale;
    let py = |y: f64| height - (y - y_lo) * scale;

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {WIDTH:.0} {height:.0}\">"
    )
    .unwrap();
    writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();

    // flux contours for orientation: psi0 and psi1 in grey, psi = 0 dashed
    let field = &grid.provenance.flux;
    let levels = [
        (grid.constants.psi0, "#999999", ""),
        (grid.constants.psi1, "#999999", ""),
        (0.0, "#bbbbbb", " stroke-dasharray=\"6 4\""),
    ];
    for (level, color, dash) in levels {
        for seg in contour_segments(field, level, (x_lo, x_hi), (y_lo, y_hi)) {
            writeln!(
                out,
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"{color}\" \
                 stroke-width=\"1\"{dash}/>",
                px(seg.0), py(seg.1), px(seg.2), py(seg.3)
            )
            .unwrap();
        }
    }

    // coordinate lines: constant-coord1 loops (closed in the periodic
    // direction) and constant-coord2 radial lines
    for i in (0..n1).step_by(stride) {
        let mut d = String::new();
        for j in 0..n2 {
            let k = i * n2 + j;
            let cmd = if j == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.3} {:.3} ", px(xs[k]), py(ys[k])).unwrap();
        }
        write!(d, "Z").unwrap();
        writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"#c03030\" stroke-width=\"0.8\"/>")
            .unwrap();
    }
    for j in (0..n2).step_by(stride) {
        let mut d = String::new();
        for i in 0..n1 {
            let k = i * n2 + j;
            let cmd = if i == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.3} {:.3} ", px(xs[k]), py(ys[k])).unwrap();
        }
        writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"#3050c0\" stroke-width=\"0.8\"/>")
            .unwrap();
    }
    // node markers at the stride intersections
    for i in (0..n1).step_by(stride) {
        for j in (0..n2).step_by(stride) {
            let k = i * n2 + j;
            writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"1.4\" fill=\"black\"/>",
                px(xs[k]), py(ys[k])
            )
            .unwrap();
        }
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}

/// Marching-squares segments of `psi = level` inside a window; cells where
/// the field is undefined are skipped.
fn contour_segments(
    field: &AnalyticField,
    level: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Vec<(f64, f64, f64, f64)> {
    const N: usize = 192;
    let hx = (x_range.1 - x_range.0) / N as f64;
    let hy = (y_range.1 - y_range.0) / N as f64;
    let mut vals = vec![f64::NAN; (N + 1) * (N + 1)];
    for (iy, chunk) in vals.chunks_mut(N + 1).enumerate() {
        let y = y_range.0 + iy as f64 * hy;
        for (ix, v) in chunk.iter_mut().enumerate() {
            let x = x_range.0 + ix as f64 * hx;
            if let Ok(jet) = field.eval_jet(x, y) {
                *v = jet.psi - level;
            }
        }
    }
    let mut segs = Vec::new();
    let at = |ix: usize, iy: usize| vals[iy * (N + 1) + ix];
    for iy in 0..N {
        for ix in 0..N {
            let c = [at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let x0 = x_range.0 + ix as f64 * hx;
            let y0 = y_range.0 + iy as f64 * hy;
            // corner coordinates in cell order
            let corners = [
                (x0, y0),
                (x0 + hx, y0),
                (x0 + hx, y0 + hy),
                (x0, y0 + hy),
            ];
            let mut crossings = Vec::new();
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    let (pa, pb) = (corners[e], corners[(e + 1) % 4]);
                    crossings.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                }
            }
            if crossings.len() == 2 {
                segs.push((crossings[0].0, crossings[0].1, crossings[1].0, crossings[1].1));
            } else if crossings.len() == 4 {
                segs.push((crossings[0].0, crossings[0].1, crossings[1].0, crossings[1].1));
                segs.push((crossings[2].0, crossings[2].1, crossings[3].0, crossings[3].1));
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfile::Tolerances;
    use crate::ode::IntegratorConfig;
    use crate::ortho::{generate_orthogonal, FirstLine, WeightMode};

    fn annulus_file(nz: usize, ne: usize) -> GridFile {
        let f = AnalyticField::annulus();
        let g = generate_orthogonal(
            &f,
            0.5,
            2.0,
            nz,
            ne,
            WeightMode::Unity,
            FirstLine::Inner,
            &IntegratorConfig::default(),
        )
        .unwrap();
        GridFile::from_flux_aligned(
            &g,
            f,
            Tolerances { rtol: 1e-11, atol: 1e-13, solver_tol: 1e-11 },
        )
    }

    #[test]
    fn small_grid_has_expected_element_counts() {
        // a 2x2 grid renders 4 node markers and 2 + 2 coordinate lines
        let mut gf = annulus_file(4, 8);
        // shrink the arrays to a 2x2 grid by subsampling
        let pick = |v: &[f64]| vec![v[0], v[4], v[2 * 8], v[2 * 8 + 4]];
        gf.n1 = 2;
        gf.n2 = 2;
        gf.coord1_nodes = vec![0.1, 0.2];
        gf.coord2_nodes = vec![0.0, 3.14];
        gf.arrays = crate::gridfile::Arrays {
            x: pick(&gf.arrays.x),
            y: pick(&gf.arrays.y),
            d1x: pick(&gf.arrays.d1x),
            d1y: pick(&gf.arrays.d1y),
            d2x: pick(&gf.arrays.d2x),
            d2y: pick(&gf.arrays.d2y),
            h: None,
        };
        let svg = emit_svg(&gf, 1).unwrap();
        assert_eq!(svg.matches("<path").count(), 4, "2 + 2 coordinate lines");
        assert_eq!(svg.matches("<circle").count(), 4, "4 node markers");
    }

    #[test]
    fn annulus_rings_are_round() {
        let gf = annulus_file(6, 32);
        let svg = emit_svg(&gf, 1).unwrap();
        assert!(svg.contains("<svg"));
        // ring radii constant per coordinate line: verify on the data
        for i in 0..gf.n1 {
            let r0 = gf.arrays.x[i * gf.n2].hypot(gf.arrays.y[i * gf.n2]);
            for j in 0..gf.n2 {
                let k = i * gf.n2 + j;
                let r = gf.arrays.x[k].hypot(gf.arrays.y[k]);
                assert!((r - r0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn stride_thins_lines() {
        let gf = annulus_file(8, 32);
        let full = emit_svg(&gf, 1).unwrap();
        let thinned = emit_svg(&gf, 4).unwrap();
        assert_eq!(full.matches("<path").count(), 8 + 32);
        assert_eq!(thinned.matches("<path").count(), 2 + 8);
    }

    #[test]
    fn deterministic_output() {
        let gf = annulus_file(4, 16);
        assert_eq!(emit_svg(&gf, 1).unwrap(), emit_svg(&gf, 1).unwrap());
    }
}
