//! Pass 1: orthogonal (optionally weight-adapted) flux-aligned grids by
//! streamline integration.
//!
//! Coordinates: `zeta = f0 (psi - psi0)` is flux-aligned, `eta in [0, 2 pi)`
//! is angle-like. The one-forms are `d zeta = f0 d psi` and
//! `d eta = h (-psi_y dx + psi_x dy)`, which makes `g^{zeta eta} = 0` exact.
//! The `h` function is carried along each radial streamline as an auxiliary
//! ODE; with a weight `w` its boundary value becomes `|f0| / w` so that `eta`
//! measures arc length on the first line when `w = |grad psi|`.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::flux::{AnalyticField, FluxJet};
use crate::ode::{self, IntegratorConfig, ThetaFrame};
use crate::par;

/// Adaption weight on the angle-like coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Unity,
    /// `w = |grad psi|`: eta becomes the arc length on the first line.
    #[default]
    GradPsi,
}

impl WeightMode {
    pub fn eval(&self, jet: &FluxJet) -> f64 {
        match self {
            WeightMode::Unity => 1.0,
            WeightMode::GradPsi => jet.grad_sq().sqrt(),
        }
    }
}

/// Which boundary carries the equidistant discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FirstLine {
    /// Start from the psi0 contour.
    #[default]
    Inner,
    /// Start from the psi1 contour (the roles of psi0/psi1 swap).
    Outer,
}

/// Exact node data on one boundary line (zeta = 0 or zeta = zeta1).
#[derive(Debug, Clone, Default)]
pub struct BoundaryRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub zeta_x: Vec<f64>,
    pub zeta_y: Vec<f64>,
    pub eta_x: Vec<f64>,
    pub eta_y: Vec<f64>,
    pub h: Vec<f64>,
}

/// Tensor-product flux-aligned grid with per-node Jacobian entries.
///
/// Arrays are row-major with eta fastest; nodes sit at cell centers of the
/// uniform partitions of `[0, zeta1]` and `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct FluxAlignedGrid {
    pub n_zeta: usize,
    pub n_eta: usize,
    pub zeta_nodes: Vec<f64>,
    pub eta_nodes: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub zeta_x: Vec<f64>,
    pub zeta_y: Vec<f64>,
    pub eta_x: Vec<f64>,
    pub eta_y: Vec<f64>,
    pub h: Vec<f64>,
    pub f0: f64,
    pub zeta1: f64,
    pub psi0: f64,
    pub psi1: f64,
    pub weight: WeightMode,
    pub frame: ThetaFrame,
    /// Exact data on the zeta = 0 line, at the eta nodes.
    pub inner_row: BoundaryRow,
    /// Exact data on the zeta = zeta1 line.
    pub outer_row: BoundaryRow,
    /// Closure gap of the boundary trace after 2 pi, in physical length.
    pub closure_gap: f64,
}

impl FluxAlignedGrid {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_eta + j
    }

    pub fn h_zeta(&self) -> f64 {
        self.zeta1 / self.n_zeta as f64
    }

    pub fn h_eta(&self) -> f64 {
        std::f64::consts::TAU / self.n_eta as f64
    }

    /// Signed volume element `1 / (zeta_x eta_y - zeta_y eta_x)` at a node.
    pub fn sqrt_g(&self, idx: usize) -> f64 {
        1.0 / (self.zeta_x[idx] * self.eta_y[idx] - self.zeta_y[idx] * self.eta_x[idx])
    }

    /// Worst flux-alignment residual `|psi(x, y) - (zeta / f0 + psi0)|`.
    pub fn flux_alignment_residual(&self, field: &AnalyticField) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_zeta {
            for j in 0..self.n_eta {
                let k = self.idx(i, j);
                let psi = field.eval_jet(self.x[k], self.y[k])?.psi;
                worst = worst.max((psi - (self.zeta_nodes[i] / self.f0 + self.psi0)).abs());
            }
        }
        Ok(worst)
    }

    /// Worst normalized orthogonality defect `|grad zeta . grad eta| / (|grad zeta| |grad eta|)`.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n_zeta * self.n_eta {
            let dot = self.zeta_x[k] * self.eta_x[k] + self.zeta_y[k] * self.eta_y[k];
            let nz = self.zeta_x[k].hypot(self.zeta_y[k]);
            let ne = self.eta_x[k].hypot(self.eta_y[k]);
            worst = worst.max((dot / (nz * ne)).abs());
        }
        worst
    }
}

/// An interior point of the region bounded by closed contours of the field.
fn ring_center(field: &AnalyticField) -> Result<(f64, f64)> {
    match field {
        AnalyticField::Annulus { center, .. } | AnalyticField::LogRadius { center } => {
            Ok((center[0], center[1]))
        }
        AnalyticField::Solovev(_) => crate::flux::find_axis(field, field.axis_seed()),
        _ => Err(GridError::Config(
            "field contours do not bound a ring-shaped domain".into(),
        )),
    }
}

/// Find a point with `psi = target` on the +x ray from `origin`, growing the
/// search range as needed.
fn flux_point_on_ray(
    field: &AnalyticField,
    origin: (f64, f64),
    target: f64,
    psi_scale: f64,
) -> Result<(f64, f64)> {
    let mut t_max = 4.0 * field.length_scale();
    for _ in 0..10 {
        match ode::find_flux_point(field, origin, (1.0, 0.0), target, t_max, psi_scale) {
            Ok(p) => return Ok(p),
            Err(GridError::BracketFailure { .. }) => t_max *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(GridError::BracketFailure { target })
}

/// Right-hand side of the theta-parameterized contour equations.
fn contour_rhs(
    field: &AnalyticField,
    frame: &ThetaFrame,
    x: f64,
    y: f64,
) -> Result<(FluxJet, f64)> {
    let jet = field.eval_jet(x, y)?;
    let (tx, ty) = frame.dtheta(x, y)?;
    let denom = jet.dx * ty - jet.dy * tx;
    let scale = jet.grad_sq().sqrt() * tx.hypot(ty);
    if denom.abs() <= 1e-12 * scale {
        return Err(GridError::DenominatorVanishing { x, y });
    }
    Ok((jet, denom))
}

/// Trace the contour `psi = psi0` once around in theta, collecting a coarse
/// polygon; returns the polygon's centroid and circumscribed radius.
fn coarse_centroid(
    field: &AnalyticField,
    start: (f64, f64),
    frame: &ThetaFrame,
) -> Result<((f64, f64), f64)> {
    let rhs = |_t: f64, p: &[f64; 2]| -> Result<[f64; 2]> {
        let (jet, denom) = contour_rhs(field, frame, p[0], p[1])?;
        Ok([-jet.dy / denom, jet.dx / denom])
    };
    let cfg = IntegratorConfig { rtol: 1e-8, atol: 1e-10, ..Default::default() };
    const M: usize = 128;
    let targets: Vec<f64> = (1..=M).map(|k| std::f64::consts::TAU * k as f64 / M as f64).collect();
    let mut poly = vec![start];
    ode::integrate_dense(&rhs, 0.0, &targets, [start.0, start.1], &cfg, |_, s| {
        poly.push((s[0], s[1]));
    })?;
    poly.pop(); // the 2 pi point duplicates the start
    let mut area2 = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for k in 0..poly.len() {
        let (x0, y0) = poly[k];
        let (x1, y1) = poly[(k + 1) % poly.len()];
        let cross = x0 * y1 - x1 * y0;
        area2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if area2.abs() <= f64::MIN_POSITIVE {
        return Err(GridError::Config("degenerate boundary contour".into()));
    }
    let c = (cx / (3.0 * area2), cy / (3.0 * area2));
    let radius = poly
        .iter()
        .map(|p| (p.0 - c.0).hypot(p.1 - c.1))
        .fold(0.0f64, f64::max);
    Ok((c, radius))
}

/// Normalization constant of the flux coordinate for `eta in [0, 2 pi]`:
/// `2 pi / closed integral of (grad psi)^2 / (w (psi_x theta_y - psi_y theta_x)) d theta`,
/// with the sign flipped when `psi1 < psi0`.
pub fn compute_f0(
    field: &AnalyticField,
    psi0: f64,
    psi1: f64,
    frame: &ThetaFrame,
    start: (f64, f64),
    weight: WeightMode,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let rhs = |_t: f64, s: &[f64; 3]| -> Result<[f64; 3]> {
        let (jet, denom) = contour_rhs(field, frame, s[0], s[1])?;
        let w = weight.eval(&jet);
        Ok([-jet.dy / denom, jet.dx / denom, jet.grad_sq() / (w * denom)])
    };
    let end = ode::integrate(&rhs, 0.0, std::f64::consts::TAU, [start.0, start.1, 0.0], cfg)?;
    let quad = end[2];
    if quad.abs() <= f64::MIN_POSITIVE {
        return Err(GridError::SingularGradient { x: start.0, y: start.1 });
    }
    let raw = std::f64::consts::TAU / quad;
    Ok(raw.abs() * (psi1 - psi0).signum())
}

/// Trace the first boundary line: integrate the `partial_eta` streamline from
/// `start` (eta = 0) through the requested eta values and on to 2 pi.
///
/// Returns the points and the closure gap at 2 pi; the gap is also checked
/// against `1e-8 * scale`.
pub fn trace_boundary(
    field: &AnalyticField,
    start: (f64, f64),
    eta_nodes: &[f64],
    f0_abs: f64,
    weight: WeightMode,
    scale: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let rhs = |p: (f64, f64)| -> Result<(f64, f64)> {
        let jet = field.eval_jet(p.0, p.1)?;
        let g2 = jet.grad_sq();
        if g2 <= f64::MIN_POSITIVE {
            return Err(GridError::SingularGradient { x: p.0, y: p.1 });
        }
        let w = weight.eval(&jet);
        Ok((-jet.dy * w / (f0_abs * g2), jet.dx * w / (f0_abs * g2)))
    };
    let v = |_t: f64, p: (f64, f64)| rhs(p);
    let mut targets = eta_nodes.to_vec();
    targets.push(std::f64::consts::TAU);
    let mut points = Vec::with_capacity(eta_nodes.len());
    let mut end = start;
    ode::integrate_streamline_dense(&v, start, 0.0, &targets, cfg, |k, p| {
        if k < eta_nodes.len() {
            points.push(p);
        } else {
            end = p;
        }
    })?;
    let gap = (end.0 - start.0).hypot(end.1 - start.1);
    let tol = 1e-8 * scale;
    if gap > tol {
        return Err(GridError::ClosureFailure { gap, tol });
    }
    Ok((points, gap))
}

/// Node data produced by one radial streamline.
struct RadialLine {
    x: Vec<f64>,
    y: Vec<f64>,
    h: Vec<f64>,
}

/// Extend each boundary point along `partial_zeta`, carrying `h` through its
/// ODE `dh/dzeta = -lap(psi) h / (f0 (grad psi)^2)`. The last target is
/// `zeta1`, providing the outer boundary row.
fn extend_radial(
    field: &AnalyticField,
    boundary: &[(f64, f64)],
    h0: &[f64],
    zeta_targets: &[f64],
    f0: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<RadialLine>> {
    let rhs = |_t: f64, s: &[f64; 3]| -> Result<[f64; 3]> {
        let jet = field.eval_jet(s[0], s[1])?;
        let g2 = jet.grad_sq();
        if g2 <= f64::MIN_POSITIVE {
            return Err(GridError::SingularGradient { x: s[0], y: s[1] });
        }
        let denom = f0 * g2;
        Ok([jet.dx / denom, jet.dy / denom, -jet.laplacian() * s[2] / denom])
    };
    let lines = par::map_indexed(boundary.len(), |j| -> Result<RadialLine> {
        let mut line = RadialLine {
            x: Vec::with_capacity(zeta_targets.len()),
            y: Vec::with_capacity(zeta_targets.len()),
            h: Vec::with_capacity(zeta_targets.len()),
        };
        let start = [boundary[j].0, boundary[j].1, h0[j]];
        crate::ode::integrate_dense(&rhs, 0.0, zeta_targets, start, cfg, |_, s| {
            line.x.push(s[0]);
            line.y.push(s[1]);
            line.h.push(s[2]);
        })?;
        Ok(line)
    });
    lines.into_iter().collect()
}

fn jacobian_entries(jet: &FluxJet, f0: f64, h: f64) -> (f64, f64, f64, f64) {
    (f0 * jet.dx, f0 * jet.dy, -h * jet.dy, h * jet.dx)
}

/// Generate the orthogonal flux-aligned grid (the five-step pass-1 algorithm).
pub fn generate_orthogonal(
    field: &AnalyticField,
    psi0: f64,
    psi1: f64,
    n_zeta: usize,
    n_eta: usize,
    weight: WeightMode,
    first_line: FirstLine,
    cfg: &IntegratorConfig,
) -> Result<FluxAlignedGrid> {
    if let FirstLine::Outer = first_line {
        return generate_orthogonal(field, psi1, psi0, n_zeta, n_eta, weight, FirstLine::Inner, cfg);
    }
    if psi0 == psi1 {
        return Err(GridError::Config("psi0 and psi1 must differ".into()));
    }
    if n_zeta < 4 || n_eta < 4 {
        return Err(GridError::Config("grid needs at least 4 cells per direction".into()));
    }
    let psi_scale = (psi1 - psi0).abs();

    // step 1: a point on the psi0 line and a theta center inside it
    let center = ring_center(field)?;
    let prelim = flux_point_on_ray(field, center, psi0, psi_scale)?;
    let (centroid, radius) = coarse_centroid(field, prelim, &ThetaFrame::new(center.0, center.1))?;
    let frame = ThetaFrame::new(centroid.0, centroid.1);
    let start = flux_point_on_ray(field, centroid, psi0, psi_scale)?;

    // step 2: the normalization constant and the boundary h
    let f0 = compute_f0(field, psi0, psi1, &frame, start, weight, cfg)?;
    let zeta1 = f0 * (psi1 - psi0);

    let h_eta = std::f64::consts::TAU / n_eta as f64;
    let eta_nodes: Vec<f64> = (0..n_eta).map(|j| (j as f64 + 0.5) * h_eta).collect();
    let h_zeta = zeta1 / n_zeta as f64;
    let zeta_nodes: Vec<f64> = (0..n_zeta).map(|i| (i as f64 + 0.5) * h_zeta).collect();

    // step 3: discretize the first line
    let (boundary, closure_gap) =
        trace_boundary(field, start, &eta_nodes, f0.abs(), weight, radius, cfg)?;
    let h0: Vec<f64> = boundary
        .iter()
        .map(|&(x, y)| -> Result<f64> {
            let jet = field.eval_jet(x, y)?;
            Ok(f0.abs() / weight.eval(&jet))
        })
        .collect::<Result<_>>()?;

    // step 4: radial extension, one streamline per eta node
    let mut zeta_targets = zeta_nodes.clone();
    zeta_targets.push(zeta1);
    let lines = extend_radial(field, &boundary, &h0, &zeta_targets, f0, cfg)?;

    // step 5: evaluate the one-form components at every node
    let n = n_zeta * n_eta;
    let mut grid = FluxAlignedGrid {
        n_zeta,
        n_eta,
        zeta_nodes,
        eta_nodes,
        x: vec![0.0; n],
        y: vec![0.0; n],
        zeta_x: vec![0.0; n],
        zeta_y: vec![0.0; n],
        eta_x: vec![0.0; n],
        eta_y: vec![0.0; n],
        h: vec![0.0; n],
        f0,
        zeta1,
        psi0,
        psi1,
        weight,
        frame,
        inner_row: BoundaryRow::default(),
        outer_row: BoundaryRow::default(),
        closure_gap,
    };
    for (j, line) in lines.iter().enumerate() {
        for i in 0..n_zeta {
            let k = grid.idx(i, j);
            grid.x[k] = line.x[i];
            grid.y[k] = line.y[i];
            grid.h[k] = line.h[i];
            let jet = field.eval_jet(line.x[i], line.y[i])?;
            let (zx, zy, ex, ey) = jacobian_entries(&jet, f0, line.h[i]);
            grid.zeta_x[k] = zx;
            grid.zeta_y[k] = zy;
            grid.eta_x[k] = ex;
            grid.eta_y[k] = ey;
        }
    }
    let row_from = |pts: &dyn Fn(usize) -> (f64, f64, f64)| -> Result<BoundaryRow> {
        let mut row = BoundaryRow::default();
        for j in 0..n_eta {
            let (x, y, h) = pts(j);
            let jet = field.eval_jet(x, y)?;
            let (zx, zy, ex, ey) = jacobian_entries(&jet, f0, h);
            row.x.push(x);
            row.y.push(y);
            row.zeta_x.push(zx);
            row.zeta_y.push(zy);
            row.eta_x.push(ex);
            row.eta_y.push(ey);
            row.h.push(h);
        }
        Ok(row)
    };
    grid.inner_row = row_from(&|j| (boundary[j].0, boundary[j].1, h0[j]))?;
    grid.outer_row = row_from(&|j| {
        let line = &lines[j];
        (line.x[n_zeta], line.y[n_zeta], line.h[n_zeta])
    })?;
    Ok(grid)
}
