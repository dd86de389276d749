//! The conduction tensor chi, its transform to flux coordinates, and the
//! solve of `d_i (sqrt(g) chi^{ij} d_j ubar) = 0` on the flux-aligned grid.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::flux::{AnalyticField, FluxJet};
use crate::interp::{fd_weights, Interp2};
use crate::ortho::{FluxAlignedGrid, WeightMode};
use crate::solver::{BcKind, DivFormProblem, SolveStats};
use crate::tensor::{push_tensor, Jacobian2, SymTensor2};

/// Selects the elliptic equation: conformal (chi = I), adapted
/// (chi = I / w) or monitor metric (chi = sqrt(G) G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChiSpec {
    Conformal,
    Adapted { weight: WeightMode },
    Monitor { k: f64, eps: f64 },
}

impl ChiSpec {
    /// Monitor metric with the reference parameters k = 0.1, eps = 0.001.
    pub fn monitor_default() -> Self {
        ChiSpec::Monitor { k: 0.1, eps: 0.001 }
    }
}

/// Evaluate chi in Cartesian components from a flux jet.
///
/// The monitor tensor is `G = T T + k^2 N N + eps I` with `T = (-psi_y, psi_x)`
/// and `N = -(psi_x, psi_y)`, scaled by
/// `sqrt(G) = [(eps + k^2 (grad psi)^2)(eps + (grad psi)^2)]^{-1/2}`.
pub fn build_chi_cartesian(spec: &ChiSpec, jet: &FluxJet) -> Result<SymTensor2> {
    let chi = match spec {
        ChiSpec::Conformal => SymTensor2::identity(),
        ChiSpec::Adapted { weight } => {
            let w = weight.eval(jet);
            if w <= 0.0 {
                return Err(GridError::SingularGradient { x: f64::NAN, y: f64::NAN });
            }
            SymTensor2::scaled_identity(1.0 / w)
        }
        ChiSpec::Monitor { k, eps } => {
            let s = jet.grad_sq();
            let k2 = k * k;
            let g = SymTensor2::new(
                jet.dy * jet.dy + k2 * jet.dx * jet.dx + eps,
                -(1.0 - k2) * jet.dx * jet.dy,
                jet.dx * jet.dx + k2 * jet.dy * jet.dy + eps,
            );
            let sqrt_g = 1.0 / ((eps + k2 * s) * (eps + s)).sqrt();
            g.scale(sqrt_g)
        }
    };
    if !chi.is_positive_definite() {
        return Err(GridError::IndefiniteTensor { xx: chi.xx, xy: chi.xy, yy: chi.yy });
    }
    Ok(chi)
}

/// Push chi from Cartesian to the grid coordinates through the forward
/// Jacobian (rules of tensor transformation).
pub fn transform_chi(chi_xy: &SymTensor2, fwd: &Jacobian2) -> Result<SymTensor2> {
    push_tensor(chi_xy, fwd)
}

/// Solver knobs; the residual tolerance matches the reference setup.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference order of the derivative arrays (2 or 4).
    pub stencil_order: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-11, max_iter: 200_000, stencil_order: 4 }
    }
}

/// chi and the volume element transformed onto the grid lattice, with exact
/// values on both boundary rows.
pub struct TransformedFields {
    pub chi_zz: Vec<f64>,
    pub chi_ze: Vec<f64>,
    pub chi_ee: Vec<f64>,
    /// Signed volume element per node.
    pub sqrt_g: Vec<f64>,
    pub row_lo: RowFields,
    pub row_hi: RowFields,
}

pub struct RowFields {
    pub chi_zz: Vec<f64>,
    pub chi_ze: Vec<f64>,
    pub chi_ee: Vec<f64>,
    pub sqrt_g: Vec<f64>,
}

/// Transform chi and sqrt(g) onto every node and both boundary rows.
pub fn transform_fields(
    grid: &FluxAlignedGrid,
    spec: &ChiSpec,
    field: &AnalyticField,
) -> Result<TransformedFields> {
    let n = grid.n_zeta * grid.n_eta;
    let mut tf = TransformedFields {
        chi_zz: vec![0.0; n],
        chi_ze: vec![0.0; n],
        chi_ee: vec![0.0; n],
        sqrt_g: vec![0.0; n],
        row_lo: RowFields {
            chi_zz: Vec::new(),
            chi_ze: Vec::new(),
            chi_ee: Vec::new(),
            sqrt_g: Vec::new(),
        },
        row_hi: RowFields {
            chi_zz: Vec::new(),
            chi_ze: Vec::new(),
            chi_ee: Vec::new(),
            sqrt_g: Vec::new(),
        },
    };
    let at = |x: f64, y: f64, zx: f64, zy: f64, ex: f64, ey: f64| -> Result<(SymTensor2, f64)> {
        let jet = field.eval_jet(x, y)?;
        let chi = build_chi_cartesian(spec, &jet)?;
        let fwd = Jacobian2::from_gradients(zx, zy, ex, ey);
        let chi_t = transform_chi(&chi, &fwd)?;
        let det = fwd.det();
        Ok((chi_t, 1.0 / det))
    };
    for k in 0..n {
        let (chi, sg) = at(
            grid.x[k],
            grid.y[k],
            grid.zeta_x[k],
            grid.zeta_y[k],
            grid.eta_x[k],
            grid.eta_y[k],
        )?;
        tf.chi_zz[k] = chi.xx;
        tf.chi_ze[k] = chi.xy;
        tf.chi_ee[k] = chi.yy;
        tf.sqrt_g[k] = sg;
    }
    for (row, out) in [(&grid.inner_row, &mut tf.row_lo), (&grid.outer_row, &mut tf.row_hi)] {
        for j in 0..grid.n_eta {
            let (chi, sg) = at(
                row.x[j],
                row.y[j],
                row.zeta_x[j],
                row.zeta_y[j],
                row.eta_x[j],
                row.eta_y[j],
            )?;
            out.chi_zz.push(chi.xx);
            out.chi_ze.push(chi.xy);
            out.chi_ee.push(chi.yy);
            out.sqrt_g.push(sg);
        }
    }
    Ok(tf)
}

/// Discrete `ubar` on the flux-aligned lattice with its derivative arrays.
#[derive(Debug, Clone)]
pub struct ScalarField2 {
    pub n_zeta: usize,
    pub n_eta: usize,
    pub h_zeta: f64,
    pub h_eta: f64,
    pub zeta1: f64,
    pub psi0: f64,
    pub psi1: f64,
    pub values: Vec<f64>,
    pub d_zeta: Vec<f64>,
    pub d_eta: Vec<f64>,
    /// `ubar_zeta` on the zeta = 0 boundary line (one-sided stencil).
    pub dz_lo: Vec<f64>,
    /// `ubar_zeta` on the zeta = zeta1 boundary line.
    pub dz_hi: Vec<f64>,
}

impl ScalarField2 {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_eta + j
    }
}

/// Solve the general elliptic equation for `ubar` on the flux-aligned grid
/// with Dirichlet data psi0/psi1 in zeta and periodicity in eta.
pub fn solve_ubar(
    grid: &FluxAlignedGrid,
    spec: &ChiSpec,
    field: &AnalyticField,
    cfg: &SolverConfig,
) -> Result<(ScalarField2, SolveStats)> {
    let tf = transform_fields(grid, spec, field)?;
    solve_ubar_with_fields(grid, &tf, cfg)
}

/// As [`solve_ubar`] when the transformed fields are already available.
pub fn solve_ubar_with_fields(
    grid: &FluxAlignedGrid,
    tf: &TransformedFields,
    cfg: &SolverConfig,
) -> Result<(ScalarField2, SolveStats)> {
    let n = grid.n_zeta * grid.n_eta;
    let scale = |sg: f64, chi: f64| sg.abs() * chi;
    let problem = DivFormProblem {
        n1: grid.n_zeta,
        n2: grid.n_eta,
        h1: grid.h_zeta(),
        h2: grid.h_eta(),
        d11: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_zz[k])).collect(),
        d12: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_ze[k])).collect(),
        d22: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_ee[k])).collect(),
        d11_lo: (0..grid.n_eta)
            .map(|j| scale(tf.row_lo.sqrt_g[j], tf.row_lo.chi_zz[j]))
            .collect(),
        d11_hi: (0..grid.n_eta)
            .map(|j| scale(tf.row_hi.sqrt_g[j], tf.row_hi.chi_zz[j]))
            .collect(),
        bc_lo: BcKind::Dirichlet(grid.psi0),
        bc_hi: BcKind::Dirichlet(grid.psi1),
        source: None,
    };
    let op = problem.assemble();
    // linear-in-zeta initial guess
    let guess: Vec<f64> = (0..n)
        .map(|k| {
            let i = k / grid.n_eta;
            grid.psi0 + (grid.psi1 - grid.psi0) * (i as f64 + 0.5) / grid.n_zeta as f64
        })
        .collect();
    let (values, stats) = op.solve_cg(Some(&guess), cfg.tol, cfg.max_iter)?;
    let mut fld = ScalarField2 {
        n_zeta: grid.n_zeta,
        n_eta: grid.n_eta,
        h_zeta: grid.h_zeta(),
        h_eta: grid.h_eta(),
        zeta1: grid.zeta1,
        psi0: grid.psi0,
        psi1: grid.psi1,
        values,
        d_zeta: vec![0.0; n],
        d_eta: vec![0.0; n],
        dz_lo: vec![0.0; grid.n_eta],
        dz_hi: vec![0.0; grid.n_eta],
    };
    fill_derivatives(&mut fld, cfg.stencil_order)?;
    Ok((fld, stats))
}

/// Populate the derivative arrays of `ubar` by centered stencils (periodic
/// in eta) and one-sided stencils anchored on the boundary values in zeta.
fn fill_derivatives(fld: &mut ScalarField2, order: usize) -> Result<()> {
    if order != 2 && order != 4 {
        return Err(GridError::Config(format!("unsupported stencil order {order}")));
    }
    let (nz, ne) = (fld.n_zeta, fld.n_eta);
    let (hz, he) = (fld.h_zeta, fld.h_eta);
    let half = order / 2;
    if nz < order + 2 || ne < order + 1 {
        return Err(GridError::LatticeMismatch(
            "lattice too small for the requested stencil order".into(),
        ));
    }
    // eta: periodic central stencil
    let eta_offsets: Vec<f64> = (-(half as i64)..=half as i64).map(|o| o as f64 * he).collect();
    let eta_w = fd_weights(&eta_offsets, 0.0, 1);
    for i in 0..nz {
        for j in 0..ne {
            let mut acc = 0.0;
            for (m, w) in eta_w.iter().enumerate() {
                let off = m as i64 - half as i64;
                let jj = (j as i64 + off).rem_euclid(ne as i64) as usize;
                acc += w * fld.values[i * ne + jj];
            }
            fld.d_eta[i * ne + j] = acc;
        }
    }
    // zeta: central stencils inside, one-sided cell-only stencils near the
    // boundary. The exact Dirichlet value is never mixed into a stencil: the
    // discrete solution carries a smooth O(h^2) error at the cells while the
    // boundary value is error-free, and a high-order stencil straddling that
    // mismatch loses an order. The derivative on the boundary line itself
    // comes from the scheme's boundary flux, `2 (u_0 - g) / h`, which is
    // superconvergent for the cell-centered divergence-form scheme.
    let pts = order + 2;
    let cell = |i: usize| (i as f64 + 0.5) * hz;
    let lo_nodes: Vec<f64> = (0..pts).map(cell).collect();
    let hi_nodes: Vec<f64> = (0..pts).map(|m| cell(nz - 1 - m)).collect();
    let lo_rows: Vec<Vec<f64>> =
        (0..half).map(|i| fd_weights(&lo_nodes, cell(i), 1)).collect();
    let hi_rows: Vec<Vec<f64>> =
        (0..half).map(|i| fd_weights(&hi_nodes, cell(nz - 1 - i), 1)).collect();
    let z_offsets: Vec<f64> = (-(half as i64)..=half as i64).map(|o| o as f64 * hz).collect();
    let z_w = fd_weights(&z_offsets, 0.0, 1);
    for j in 0..ne {
        let col = |i: usize| fld.values[i * ne + j];
        for i in 0..nz {
            let d = if i < half {
                lo_rows[i].iter().enumerate().map(|(m, c)| c * col(m)).sum()
            } else if i >= nz - half {
                hi_rows[nz - 1 - i]
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * col(nz - 1 - m))
                    .sum()
            } else {
                let mut acc = 0.0;
                for (m, w) in z_w.iter().enumerate() {
                    let off = m as i64 - half as i64;
                    acc += w * col((i as i64 + off) as usize);
                }
                acc
            };
            fld.d_zeta[i * ne + j] = d;
        }
        fld.dz_lo[j] = 2.0 * (col(0) - fld.psi0) / hz;
        fld.dz_hi[j] = 2.0 * (fld.psi1 - col(nz - 1)) / hz;
    }
    Ok(())
}

/// Relative L2 difference of two solutions over the computational rectangle
/// (flat measure); lattices must match.
pub fn self_consistency_error(u1: &ScalarField2, u2: &ScalarField2) -> Result<f64> {
    if u1.n_zeta != u2.n_zeta || u1.n_eta != u2.n_eta {
        return Err(GridError::LatticeMismatch(format!(
            "{}x{} vs {}x{}; interpolate first (self_consistency_error_interp)",
            u1.n_zeta, u1.n_eta, u2.n_zeta, u2.n_eta
        )));
    }
    let mut diff_sq = 0.0;
    let mut ref_sq = 0.0;
    for (a, b) in u1.values.iter().zip(&u2.values) {
        diff_sq += (a - b) * (a - b);
        ref_sq += a * a;
    }
    if ref_sq <= f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok((diff_sq / ref_sq).sqrt())
}

/// As [`self_consistency_error`], interpolating `u2` onto the lattice of
/// `u1` when the resolutions differ.
pub fn self_consistency_error_interp(u1: &ScalarField2, u2: &ScalarField2) -> Result<f64> {
    if u1.n_zeta == u2.n_zeta && u1.n_eta == u2.n_eta {
        return self_consistency_error(u1, u2);
    }
    if (u1.zeta1 - u2.zeta1).abs() > 1e-6 * u1.zeta1.abs() {
        return Err(GridError::LatticeMismatch(
            "solutions live on different zeta extents".into(),
        ));
    }
    let row_lo = vec![u2.psi0; u2.n_eta];
    let row_hi = vec![u2.psi1; u2.n_eta];
    let it = Interp2::from_cells(
        &u2.values,
        u2.n_zeta,
        u2.n_eta,
        u2.h_zeta,
        u2.h_eta,
        0.5 * u2.h_eta,
        Some(&row_lo),
        Some(&row_hi),
    )?;
    let mut diff_sq = 0.0;
    let mut ref_sq = 0.0;
    for i in 0..u1.n_zeta {
        let z = (i as f64 + 0.5) * u1.h_zeta;
        for j in 0..u1.n_eta {
            let e = (j as f64 + 0.5) * u1.h_eta;
            let a = u1.values[i * u1.n_eta + j];
            let b = it.eval(z, e)?;
            diff_sq += (a - b) * (a - b);
            ref_sq += a * a;
        }
    }
    if ref_sq <= f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok((diff_sq / ref_sq).sqrt())
}

/// Re-exported for callers that need raw operator access (benchmarks, tests).
pub use crate::solver::Operator;

/// Assemble the ubar operator alone (for symmetry and flux diagnostics).
pub fn assemble_ubar_operator(
    grid: &FluxAlignedGrid,
    spec: &ChiSpec,
    field: &AnalyticField,
) -> Result<Operator> {
    let tf = transform_fields(grid, spec, field)?;
    let n = grid.n_zeta * grid.n_eta;
    let scale = |sg: f64, chi: f64| sg.abs() * chi;
    let problem = DivFormProblem {
        n1: grid.n_zeta,
        n2: grid.n_eta,
        h1: grid.h_zeta(),
        h2: grid.h_eta(),
        d11: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_zz[k])).collect(),
        d12: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_ze[k])).collect(),
        d22: (0..n).map(|k| scale(tf.sqrt_g[k], tf.chi_ee[k])).collect(),
        d11_lo: (0..grid.n_eta)
            .map(|j| scale(tf.row_lo.sqrt_g[j], tf.row_lo.chi_zz[j]))
            .collect(),
        d11_hi: (0..grid.n_eta)
            .map(|j| scale(tf.row_hi.sqrt_g[j], tf.row_hi.chi_zz[j]))
            .collect(),
        bc_lo: BcKind::Dirichlet(grid.psi0),
        bc_hi: BcKind::Dirichlet(grid.psi1),
        source: None,
    };
    Ok(problem.assemble())
}

pub use crate::solver::CornerScratch as OperatorScratch;
