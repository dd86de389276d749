//! Grid quality metrics (cell lengths, size ratios, areas, orthogonality)
//! and the two analytic elliptic benchmark problems with L2 error and
//! convergence-order reporting.

use serde::{Deserialize, Serialize};

use crate::elliptic::SolverConfig;
use crate::error::{GridError, Result};
use crate::flux::{AnalyticField, FluxJet};
use crate::interp::fd_weights;
use crate::ode::{self, IntegratorConfig, ThetaFrame};
use crate::solver::{BcKind, DivFormProblem, SolveStats};
use crate::tensor::inverse_metric_from_gradients;

/// Borrowed view of any computational grid: node coordinates plus the
/// gradients of both computational coordinates, second index fastest and
/// periodic. Boundary rows are present for freshly generated grids and
/// absent for grids loaded from files.
pub struct GridView<'a> {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub d1x: &'a [f64],
    pub d1y: &'a [f64],
    pub d2x: &'a [f64],
    pub d2y: &'a [f64],
    pub psi0: f64,
    pub psi1: f64,
    pub row_lo: Option<RowView<'a>>,
    pub row_hi: Option<RowView<'a>>,
}

pub struct RowView<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub d1x: &'a [f64],
    pub d1y: &'a [f64],
    pub d2x: &'a [f64],
    pub d2y: &'a [f64],
}

impl crate::ortho::FluxAlignedGrid {
    pub fn view(&self) -> GridView<'_> {
        GridView {
            n1: self.n_zeta,
            n2: self.n_eta,
            h1: self.h_zeta(),
            h2: self.h_eta(),
            x: &self.x,
            y: &self.y,
            d1x: &self.zeta_x,
            d1y: &self.zeta_y,
            d2x: &self.eta_x,
            d2y: &self.eta_y,
            psi0: self.psi0,
            psi1: self.psi1,
            row_lo: Some(RowView {
                x: &self.inner_row.x,
                y: &self.inner_row.y,
                d1x: &self.inner_row.zeta_x,
                d1y: &self.inner_row.zeta_y,
                d2x: &self.inner_row.eta_x,
                d2y: &self.inner_row.eta_y,
            }),
            row_hi: Some(RowView {
                x: &self.outer_row.x,
                y: &self.outer_row.y,
                d1x: &self.outer_row.zeta_x,
                d1y: &self.outer_row.zeta_y,
                d2x: &self.outer_row.eta_x,
                d2y: &self.outer_row.eta_y,
            }),
        }
    }
}

impl crate::elliptic_grid::EllipticGrid {
    pub fn view(&self) -> GridView<'_> {
        GridView {
            n1: self.n_u,
            n2: self.n_v,
            h1: self.h_u(),
            h2: self.h_v(),
            x: &self.x,
            y: &self.y,
            d1x: &self.u_x,
            d1y: &self.u_y,
            d2x: &self.v_x,
            d2y: &self.v_y,
            psi0: self.psi0,
            psi1: self.psi1,
            row_lo: Some(RowView {
                x: &self.inner_row.x,
                y: &self.inner_row.y,
                d1x: &self.inner_row.u_x,
                d1y: &self.inner_row.u_y,
                d2x: &self.inner_row.v_x,
                d2y: &self.inner_row.v_y,
            }),
            row_hi: Some(RowView {
                x: &self.outer_row.x,
                y: &self.outer_row.y,
                d1x: &self.outer_row.u_x,
                d1y: &self.outer_row.u_y,
                d2x: &self.outer_row.v_x,
                d2y: &self.outer_row.v_y,
            }),
        }
    }
}

/// Per-node cell lengths `l_1 = sqrt(g_11) h_1`, `l_2 = sqrt(g_22) h_2`
/// computed from the stored inverse-map gradients.
pub fn cell_lengths(view: &GridView) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = view.n1 * view.n2;
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for k in 0..n {
        let m = inverse_metric_from_gradients(view.d1x[k], view.d1y[k], view.d2x[k], view.d2y[k])?;
        l1[k] = m.sqrt_g * m.g_vv.sqrt() * view.h1;
        l2[k] = m.sqrt_g * m.g_uu.sqrt() * view.h2;
    }
    Ok((l1, l2))
}

/// Ratio of maximal to minimal cell size per direction.
pub fn size_ratios(l1: &[f64], l2: &[f64]) -> Result<(f64, f64)> {
    let ratio = |l: &[f64]| -> Result<f64> {
        if l.is_empty() {
            return Err(GridError::Config("empty length array".into()));
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &v in l {
            if !(v > 0.0) {
                return Err(GridError::NonPositiveLength(v));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(hi / lo)
    };
    Ok((ratio(l1)?, ratio(l2)?))
}

/// Domain area by midpoint quadrature of `|sqrt(g)|` with an
/// Euler-Maclaurin endpoint correction in the nonperiodic direction (the
/// periodic direction needs none).
pub fn domain_area(view: &GridView) -> Result<f64> {
    let (n1, n2) = (view.n1, view.n2);
    let mut col = vec![0.0; n1];
    for i in 0..n1 {
        let mut acc = 0.0;
        for j in 0..n2 {
            let k = i * n2 + j;
            let m =
                inverse_metric_from_gradients(view.d1x[k], view.d1y[k], view.d2x[k], view.d2y[k])?;
            acc += m.sqrt_g;
        }
        col[i] = acc * view.h2;
    }
    let sum: f64 = col.iter().sum::<f64>() * view.h1;
    if n1 < 6 {
        return Ok(sum);
    }
    // F'(0) and F'(L) from one-sided fits through the first/last five columns
    let nodes: Vec<f64> = (0..5).map(|m| (m as f64 + 0.5) * view.h1).collect();
    let w = fd_weights(&nodes, 0.0, 1);
    let d_lo: f64 = (0..5).map(|m| w[m] * col[m]).sum();
    let d_hi: f64 = (0..5).map(|m| -w[m] * col[n1 - 1 - m]).sum();
    Ok(sum + view.h1 * view.h1 / 24.0 * (d_hi - d_lo))
}

/// Deviation from orthogonality as an angle:
/// `asin(|g^{12}| / sqrt(g^{11} g^{22}))`.
fn nonorthogonality_angle(d1x: f64, d1y: f64, d2x: f64, d2y: f64) -> f64 {
    let g11 = d1x * d1x + d1y * d1y;
    let g12 = d1x * d2x + d1y * d2y;
    let g22 = d2x * d2x + d2y * d2y;
    (g12.abs() / (g11 * g22).sqrt()).clamp(0.0, 1.0).asin()
}

/// Worst angle between the first-coordinate lines and the boundary normal
/// on the two boundary rows (the grids are built to make this zero).
pub fn boundary_orthogonality(view: &GridView) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for row in [view.row_lo.as_ref(), view.row_hi.as_ref()] {
        let row = row?;
        for j in 0..row.x.len() {
            worst =
                worst.max(nonorthogonality_angle(row.d1x[j], row.d1y[j], row.d2x[j], row.d2y[j]));
        }
    }
    Some(worst)
}

/// Worst interior deviation from orthogonality, in radians.
pub fn interior_nonorthogonality(view: &GridView) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..view.n1 * view.n2 {
        worst = worst
            .max(nonorthogonality_angle(view.d1x[k], view.d1y[k], view.d2x[k], view.d2y[k]));
    }
    worst
}

/// Quality summary of one grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub max_l1: f64,
    pub min_l1: f64,
    pub max_l2: f64,
    pub min_l2: f64,
    pub a1: f64,
    pub a2: f64,
    pub area: f64,
    pub max_boundary_angle: Option<f64>,
    pub max_interior_nonorthogonality: f64,
}

pub fn quality_report(view: &GridView) -> Result<QualityReport> {
    let (l1, l2) = cell_lengths(view)?;
    let (a1, a2) = size_ratios(&l1, &l2)?;
    let fold = |l: &[f64]| {
        l.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)))
    };
    let (max_l1, min_l1) = fold(&l1);
    let (max_l2, min_l2) = fold(&l2);
    Ok(QualityReport {
        max_l1,
        min_l1,
        max_l2,
        min_l2,
        a1,
        a2,
        area: domain_area(view)?,
        max_boundary_angle: boundary_orthogonality(view),
        max_interior_nonorthogonality: interior_nonorthogonality(view),
    })
}

impl QualityReport {
    /// Plain-text table in the style of the cell-size comparison tables.
    pub fn table(&self, label: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<24} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}\n",
            "grid", "max l_u", "max l_v", "min l_u", "min l_v", "a_u", "a_v"
        ));
        s.push_str(&format!(
            "{:<24} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>8.2} {:>8.2}\n",
            label, self.max_l1, self.max_l2, self.min_l1, self.min_l2, self.a1, self.a2
        ));
        s
    }
}

/// Fixed parameters of the two analytic benchmark problems.
pub const BENCH_X0: f64 = 550.0;
pub const BENCH_XB: f64 = 440.0;
pub const BENCH_YB: f64 = -220.0;
pub const BENCH_SIGMA: f64 = 40.0;

/// Analytic elliptic benchmark: `div(chi grad f) = rho` with a known f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkProblem {
    /// Flux-aligned solution `0.1 (psi - psi0)(psi - 2 psi1 + psi0)`;
    /// Dirichlet at psi0, Neumann at psi1.
    FluxAligned,
    /// Compactly supported bump at (440, -220) with sigma = 40; Dirichlet
    /// at both boundaries.
    Localized,
}

/// Scalar conductivity `chi(x, y)` of a problem.
pub fn bench_chi(
    problem: BenchmarkProblem,
    jet: &FluxJet,
    frame: &ThetaFrame,
    x: f64,
    y: f64,
) -> Result<f64> {
    if x <= 0.0 {
        return Err(GridError::Domain { x, y, reason: "benchmark chi requires x > 0".into() });
    }
    let base = BENCH_X0 / x * (1.0 + jet.grad_sq()).sqrt();
    Ok(match problem {
        BenchmarkProblem::FluxAligned => base,
        BenchmarkProblem::Localized => base * (1.0 + 0.5 * frame.theta(x, y)?.sin()),
    })
}

/// Analytic solution of a problem at a point.
pub fn bench_solution(
    problem: BenchmarkProblem,
    jet: &FluxJet,
    psi0: f64,
    psi1: f64,
    x: f64,
    y: f64,
) -> f64 {
    match problem {
        BenchmarkProblem::FluxAligned => {
            0.1 * (jet.psi - psi0) * (jet.psi - 2.0 * psi1 + psi0)
        }
        BenchmarkProblem::Localized => {
            let t = ((x - BENCH_XB) / BENCH_SIGMA).powi(2) + ((y - BENCH_YB) / BENCH_SIGMA).powi(2);
            if t >= 1.0 {
                0.0
            } else {
                (1.0 + 1.0 / (t - 1.0)).exp()
            }
        }
    }
}

/// Analytic right-hand side `rho = div(chi grad f_ana)` assembled by the
/// chain rule through the flux jet (and d theta for the localized case).
pub fn rhs_for(
    problem: BenchmarkProblem,
    field: &AnalyticField,
    frame: &ThetaFrame,
    psi0: f64,
    psi1: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    let jet = field.eval_jet(x, y)?;
    if x <= 0.0 {
        return Err(GridError::Domain { x, y, reason: "benchmark requires x > 0".into() });
    }
    let s = jet.grad_sq();
    let root = (1.0 + s).sqrt();
    let chi_base = BENCH_X0 / x * root;
    // gradient of the base conductivity
    let sx = jet.dx * jet.dxx + jet.dy * jet.dxy;
    let sy = jet.dx * jet.dxy + jet.dy * jet.dyy;
    let chi_base_x = -BENCH_X0 / (x * x) * root + BENCH_X0 / x * sx / root;
    let chi_base_y = BENCH_X0 / x * sy / root;
    match problem {
        BenchmarkProblem::FluxAligned => {
            let fp = 0.2 * (jet.psi - psi1);
            let fpp = 0.2;
            let lap_f = fpp * s + fp * jet.laplacian();
            let grad_f = (fp * jet.dx, fp * jet.dy);
            Ok(chi_base * lap_f + chi_base_x * grad_f.0 + chi_base_y * grad_f.1)
        }
        BenchmarkProblem::Localized => {
            let t = ((x - BENCH_XB) / BENCH_SIGMA).powi(2) + ((y - BENCH_YB) / BENCH_SIGMA).powi(2);
            if t >= 1.0 {
                return Ok(0.0);
            }
            let b = (1.0 + 1.0 / (t - 1.0)).exp();
            let gp = -1.0 / ((t - 1.0) * (t - 1.0));
            let gpp = 2.0 / ((t - 1.0) * (t - 1.0) * (t - 1.0));
            let tx = 2.0 * (x - BENCH_XB) / (BENCH_SIGMA * BENCH_SIGMA);
            let ty = 2.0 * (y - BENCH_YB) / (BENCH_SIGMA * BENCH_SIGMA);
            let txx = 2.0 / (BENCH_SIGMA * BENCH_SIGMA);
            let bx = b * gp * tx;
            let by = b * gp * ty;
            let bxx = b * ((gp * tx) * (gp * tx) + gpp * tx * tx + gp * txx);
            let byy = b * ((gp * ty) * (gp * ty) + gpp * ty * ty + gp * txx);
            let modulate = 1.0 + 0.5 * frame.theta(x, y)?.sin();
            let (th_x, th_y) = frame.dtheta(x, y)?;
            let cosx = 0.5 * frame.theta(x, y)?.cos();
            let chi = chi_base * modulate;
            let chi_x = chi_base_x * modulate + chi_base * cosx * th_x;
            let chi_y = chi_base_y * modulate + chi_base * cosx * th_y;
            Ok(chi * (bxx + byy) + chi_x * bx + chi_y * by)
        }
    }
}

/// Relative L2 error with the `sqrt(g) du dv` measure.
pub fn relative_l2_error(view: &GridView, f_num: &[f64], f_ana: &[f64]) -> Result<f64> {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for k in 0..view.n1 * view.n2 {
        let m = inverse_metric_from_gradients(view.d1x[k], view.d1y[k], view.d2x[k], view.d2y[k])?;
        diff += m.sqrt_g * (f_num[k] - f_ana[k]) * (f_num[k] - f_ana[k]);
        norm += m.sqrt_g * f_ana[k] * f_ana[k];
    }
    if norm <= f64::MIN_POSITIVE {
        return Err(GridError::Config("benchmark solution has zero norm on this grid".into()));
    }
    Ok((diff / norm).sqrt())
}

/// Outcome of one benchmark solve.
pub struct BenchmarkResult {
    pub f_num: Vec<f64>,
    pub f_ana: Vec<f64>,
    pub rel_error: f64,
    pub stats: SolveStats,
}

/// Discretize and solve a benchmark problem on a grid.
pub fn solve_benchmark(
    view: &GridView,
    field: &AnalyticField,
    frame: &ThetaFrame,
    problem: BenchmarkProblem,
    cfg: &SolverConfig,
) -> Result<BenchmarkResult> {
    let (n1, n2) = (view.n1, view.n2);
    let n = n1 * n2;
    let mut d11 = vec![0.0; n];
    let mut d12 = vec![0.0; n];
    let mut d22 = vec![0.0; n];
    let mut source = vec![0.0; n];
    let mut f_ana = vec![0.0; n];
    for k in 0..n {
        let (x, y) = (view.x[k], view.y[k]);
        let jet = field.eval_jet(x, y)?;
        let chi = bench_chi(problem, &jet, frame, x, y)?;
        let m = inverse_metric_from_gradients(view.d1x[k], view.d1y[k], view.d2x[k], view.d2y[k])?;
        let sg = m.sqrt_g;
        d11[k] = sg * chi * m.g_uu;
        d12[k] = sg * chi * m.g_uv;
        d22[k] = sg * chi * m.g_vv;
        source[k] = sg * rhs_for(problem, field, frame, view.psi0, view.psi1, x, y)?;
        f_ana[k] = bench_solution(problem, &jet, view.psi0, view.psi1, x, y);
    }
    let face_d11 = |row: Option<&RowView>, near: usize, next: usize| -> Result<Vec<f64>> {
        match row {
            Some(r) => (0..n2)
                .map(|j| -> Result<f64> {
                    let jet = field.eval_jet(r.x[j], r.y[j])?;
                    let chi = bench_chi(problem, &jet, frame, r.x[j], r.y[j])?;
                    let m =
                        inverse_metric_from_gradients(r.d1x[j], r.d1y[j], r.d2x[j], r.d2y[j])?;
                    Ok(m.sqrt_g * chi * m.g_uu)
                })
                .collect(),
            // no boundary row in the file: one-sided extrapolation of the
            // cell coefficients to the face
            None => Ok((0..n2)
                .map(|j| 1.5 * d11[near * n2 + j] - 0.5 * d11[next * n2 + j])
                .collect()),
        }
    };
    let d11_lo = face_d11(view.row_lo.as_ref(), 0, 1)?;
    let d11_hi = face_d11(view.row_hi.as_ref(), n1 - 1, n1 - 2)?;
    let (bc_lo, bc_hi) = match problem {
        BenchmarkProblem::FluxAligned => (BcKind::Dirichlet(0.0), BcKind::Neumann),
        BenchmarkProblem::Localized => (BcKind::Dirichlet(0.0), BcKind::Dirichlet(0.0)),
    };
    let op = DivFormProblem {
        n1,
        n2,
        h1: view.h1,
        h2: view.h2,
        d11,
        d12,
        d22,
        d11_lo,
        d11_hi,
        bc_lo,
        bc_hi,
        source: Some(source),
    }
    .assemble();
    let (f_num, stats) = op.solve_cg(Some(&f_ana), cfg.tol, cfg.max_iter)?;
    let rel_error = relative_l2_error(view, &f_num, &f_ana)?;
    Ok(BenchmarkResult { f_num, f_ana, rel_error, stats })
}

/// `log2(e_i / e_{i+1})` for successive 2x refinements.
pub fn convergence_order(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(GridError::Config("need at least two errors for an order".into()));
    }
    errors
        .windows(2)
        .map(|w| {
            if !(w[0] > 0.0) || !(w[1] > 0.0) {
                return Err(GridError::Config(format!("nonpositive error in {w:?}")));
            }
            Ok((w[0] / w[1]).log2())
        })
        .collect()
}

/// Area of the ring between two flux contours by Green's theorem,
/// `closed integral of x dy` along each traced contour.
pub fn greens_area(
    field: &AnalyticField,
    frame: &ThetaFrame,
    start_inner: (f64, f64),
    start_outer: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let loop_area = |start: (f64, f64)| -> Result<f64> {
        let rhs = |_t: f64, s: &[f64; 3]| -> Result<[f64; 3]> {
            let jet = field.eval_jet(s[0], s[1])?;
            let (tx, ty) = frame.dtheta(s[0], s[1])?;
            let denom = jet.dx * ty - jet.dy * tx;
            let scale = jet.grad_sq().sqrt() * tx.hypot(ty);
            if denom.abs() <= 1e-12 * scale {
                return Err(GridError::DenominatorVanishing { x: s[0], y: s[1] });
            }
            let dy_dtheta = jet.dx / denom;
            Ok([-jet.dy / denom, dy_dtheta, s[0] * dy_dtheta])
        };
        let end = ode::integrate(
            &rhs,
            0.0,
            std::f64::consts::TAU,
            [start.0, start.1, 0.0],
            cfg,
        )?;
        Ok(end[2])
    };
    let a_inner = loop_area(start_inner)?;
    let a_outer = loop_area(start_outer)?;
    Ok((a_outer - a_inner).abs())
}
