//! Pass 2: the final (u, v) elliptic grid, built by streamline integration
//! of the basis fields of `u = c0 (ubar - psi0)` inside the flux-aligned
//! computational rectangle.

use crate::elliptic::{transform_fields, ChiSpec, ScalarField2, TransformedFields};
use crate::error::{GridError, Result};
use crate::flux::AnalyticField;
use crate::interp::{Interp2, PeriodicSpline};
use crate::ode::{self, IntegratorConfig, ThetaFrame};
use crate::ortho::FluxAlignedGrid;
use crate::par;
use crate::tensor::{compose_oneforms, Jacobian2};

/// Exact node data on one (u, v) boundary row.
#[derive(Debug, Clone, Default)]
pub struct UvBoundaryRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
}

/// Final elliptic grid with node coordinates and the inverse-map Jacobian.
///
/// Arrays are row-major with v fastest; nodes sit at cell centers of the
/// uniform partitions of `[0, u1]` and `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct EllipticGrid {
    pub n_u: usize,
    pub n_v: usize,
    pub u_nodes: Vec<f64>,
    pub v_nodes: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
    pub c0: f64,
    pub u1: f64,
    pub psi0: f64,
    pub psi1: f64,
    pub frame: ThetaFrame,
    pub inner_row: UvBoundaryRow,
    pub outer_row: UvBoundaryRow,
    /// Gap of the v boundary trace after 2 pi, in eta units.
    pub v_closure_gap: f64,
}

impl EllipticGrid {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_v + j
    }

    pub fn h_u(&self) -> f64 {
        self.u1 / self.n_u as f64
    }

    pub fn h_v(&self) -> f64 {
        std::f64::consts::TAU / self.n_v as f64
    }
}

/// The normalization constant making `v` span `[0, 2 pi]`:
/// `c0 = 2 pi / closed integral of sqrt(g) chi^{zeta zeta} ubar_zeta(0, eta) d eta`.
///
/// The quadrature is the exact integral of the periodic cubic spline of the
/// integrand, which on the uniform lattice reduces to the midpoint sum; the
/// v boundary trace then closes by construction.
pub fn compute_c0(
    grid: &FluxAlignedGrid,
    tf: &TransformedFields,
    ubar: &ScalarField2,
) -> Result<f64> {
    let integrand = c0_integrand(grid, tf, ubar);
    let first_sign = integrand[0].signum();
    for (j, v) in integrand.iter().enumerate() {
        if v.signum() != first_sign || *v == 0.0 {
            return Err(GridError::SignChange { index: j });
        }
    }
    let quad = PeriodicSpline::integral_over_period(&integrand, grid.h_eta());
    Ok(std::f64::consts::TAU / quad)
}

fn c0_integrand(grid: &FluxAlignedGrid, tf: &TransformedFields, ubar: &ScalarField2) -> Vec<f64> {
    (0..grid.n_eta)
        .map(|j| tf.row_lo.sqrt_g[j] * tf.row_lo.chi_zz[j] * ubar.dz_lo[j])
        .collect()
}

/// The one-forms `du` and `dv` on the lattice, in both flux and Cartesian
/// components.
pub struct DualForms {
    pub u_zeta: Vec<f64>,
    pub u_eta: Vec<f64>,
    pub v_zeta: Vec<f64>,
    pub v_eta: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
}

/// `du = c0 (ubar_zeta dzeta + ubar_eta deta)` and its Hodge dual
/// `dv = c0 sqrt(g) (-(chi^{eta zeta} ubar_zeta + chi^{eta eta} ubar_eta) dzeta
///                  + (chi^{zeta zeta} ubar_zeta + chi^{zeta eta} ubar_eta) deta)`,
/// composed to Cartesian components through the pass-1 Jacobian.
pub fn dual_derivatives(
    grid: &FluxAlignedGrid,
    tf: &TransformedFields,
    ubar: &ScalarField2,
    c0: f64,
) -> DualForms {
    let n = grid.n_zeta * grid.n_eta;
    let mut out = DualForms {
        u_zeta: vec![0.0; n],
        u_eta: vec![0.0; n],
        v_zeta: vec![0.0; n],
        v_eta: vec![0.0; n],
        u_x: vec![0.0; n],
        u_y: vec![0.0; n],
        v_x: vec![0.0; n],
        v_y: vec![0.0; n],
    };
    for k in 0..n {
        let (uz, ue) = (c0 * ubar.d_zeta[k], c0 * ubar.d_eta[k]);
        let sg = tf.sqrt_g[k];
        let vz = -c0 * sg * (tf.chi_ze[k] * ubar.d_zeta[k] + tf.chi_ee[k] * ubar.d_eta[k]);
        let ve = c0 * sg * (tf.chi_zz[k] * ubar.d_zeta[k] + tf.chi_ze[k] * ubar.d_eta[k]);
        out.u_zeta[k] = uz;
        out.u_eta[k] = ue;
        out.v_zeta[k] = vz;
        out.v_eta[k] = ve;
        let fwd = Jacobian2::from_gradients(
            grid.zeta_x[k],
            grid.zeta_y[k],
            grid.eta_x[k],
            grid.eta_y[k],
        );
        let (ux, uy) = compose_oneforms((uz, ue), &fwd);
        let (vx, vy) = compose_oneforms((vz, ve), &fwd);
        out.u_x[k] = ux;
        out.u_y[k] = uy;
        out.v_x[k] = vx;
        out.v_y[k] = vy;
    }
    out
}

/// The basis vector fields `partial_u` and `partial_v` in (zeta, eta)
/// components, dual to `du` and `dv` at every node.
pub struct BasisFields {
    pub zeta_u: Vec<f64>,
    pub eta_u: Vec<f64>,
    pub zeta_v: Vec<f64>,
    pub eta_v: Vec<f64>,
}

pub fn basis_fields(
    grid: &FluxAlignedGrid,
    tf: &TransformedFields,
    ubar: &ScalarField2,
    c0: f64,
) -> Result<BasisFields> {
    let n = grid.n_zeta * grid.n_eta;
    let mut out = BasisFields {
        zeta_u: vec![0.0; n],
        eta_u: vec![0.0; n],
        zeta_v: vec![0.0; n],
        eta_v: vec![0.0; n],
    };
    for k in 0..n {
        let (uz, ue) = (ubar.d_zeta[k], ubar.d_eta[k]);
        let denom =
            uz * uz * tf.chi_zz[k] + 2.0 * uz * ue * tf.chi_ze[k] + ue * ue * tf.chi_ee[k];
        if denom.abs() <= f64::MIN_POSITIVE {
            return Err(GridError::DenominatorVanishing {
                x: grid.x[k],
                y: grid.y[k],
            });
        }
        out.zeta_u[k] = (tf.chi_zz[k] * uz + tf.chi_ze[k] * ue) / (c0 * denom);
        out.eta_u[k] = (tf.chi_ze[k] * uz + tf.chi_ee[k] * ue) / (c0 * denom);
        out.zeta_v[k] = -ue / (c0 * tf.sqrt_g[k] * denom);
        out.eta_v[k] = uz / (c0 * tf.sqrt_g[k] * denom);
    }
    Ok(out)
}

/// Everything pass 2 interpolates over the (zeta, eta) rectangle.
struct Pass2Interp {
    x: Interp2,
    y: Interp2,
    u_x: Interp2,
    u_y: Interp2,
    v_x: Interp2,
    v_y: Interp2,
    zeta_u: Interp2,
    eta_u: Interp2,
}

struct RowForms {
    u_x: Vec<f64>,
    u_y: Vec<f64>,
    v_x: Vec<f64>,
    v_y: Vec<f64>,
}

fn row_forms(
    grid: &FluxAlignedGrid,
    tf: &TransformedFields,
    ubar: &ScalarField2,
    c0: f64,
    lo: bool,
) -> RowForms {
    let row = if lo { &grid.inner_row } else { &grid.outer_row };
    let rf = if lo { &tf.row_lo } else { &tf.row_hi };
    let dz = if lo { &ubar.dz_lo } else { &ubar.dz_hi };
    let n = grid.n_eta;
    let mut out = RowForms {
        u_x: vec![0.0; n],
        u_y: vec![0.0; n],
        v_x: vec![0.0; n],
        v_y: vec![0.0; n],
    };
    for j in 0..n {
        // ubar_eta vanishes identically on the boundary rows
        let (uz, ue) = (c0 * dz[j], 0.0);
        let vz = -c0 * rf.sqrt_g[j] * rf.chi_ze[j] * dz[j];
        let ve = c0 * rf.sqrt_g[j] * rf.chi_zz[j] * dz[j];
        let fwd =
            Jacobian2::from_gradients(row.zeta_x[j], row.zeta_y[j], row.eta_x[j], row.eta_y[j]);
        let (ux, uy) = compose_oneforms((uz, ue), &fwd);
        let (vx, vy) = compose_oneforms((vz, ve), &fwd);
        out.u_x[j] = ux;
        out.u_y[j] = uy;
        out.v_x[j] = vx;
        out.v_y[j] = vy;
    }
    out
}

/// Build the elliptic grid from the solved `ubar` (eight-step pass-2
/// algorithm): normalize `c0`, form the dual one-forms and basis fields,
/// trace `partial_v` along `zeta = 0`, trace `partial_u` from each start
/// point, and interpolate the map and Jacobian onto the traced points.
pub fn generate_elliptic(
    field: &AnalyticField,
    grid: &FluxAlignedGrid,
    ubar: &ScalarField2,
    spec: &ChiSpec,
    n_u: usize,
    n_v: usize,
    cfg: &IntegratorConfig,
) -> Result<EllipticGrid> {
    if grid.f0 <= 0.0 {
        return Err(GridError::Config(
            "elliptic grid generation needs psi1 > psi0 (a right-handed pass-1 grid)".into(),
        ));
    }
    if ubar.n_zeta != grid.n_zeta || ubar.n_eta != grid.n_eta {
        return Err(GridError::LatticeMismatch(
            "ubar was solved on a different lattice than the grid".into(),
        ));
    }
    if n_u < 2 || n_v < 4 {
        return Err(GridError::Config("output grid needs at least 2 x 4 cells".into()));
    }
    let tf = transform_fields(grid, spec, field)?;
    let c0 = compute_c0(grid, &tf, ubar)?;
    let u1 = c0 * (grid.psi1 - grid.psi0);
    let duals = dual_derivatives(grid, &tf, ubar, c0);
    let basis = basis_fields(grid, &tf, ubar, c0)?;
    let forms_lo = row_forms(grid, &tf, ubar, c0, true);
    let forms_hi = row_forms(grid, &tf, ubar, c0, false);

    // basis-field components on the boundary rows for the interpolants
    let mut basis_rows_lo = (vec![0.0; grid.n_eta], vec![0.0; grid.n_eta]);
    let mut basis_rows_hi = (vec![0.0; grid.n_eta], vec![0.0; grid.n_eta]);
    for j in 0..grid.n_eta {
        // on the rows ubar_eta = 0: zeta_u = 1/(c0 ubar_zeta), eta_u = chi^{ze}/(c0 chi_zz ubar_zeta)
        let dz_lo = ubar.dz_lo[j];
        let dz_hi = ubar.dz_hi[j];
        basis_rows_lo.0[j] = 1.0 / (c0 * dz_lo);
        basis_rows_lo.1[j] = tf.row_lo.chi_ze[j] / (c0 * tf.row_lo.chi_zz[j] * dz_lo);
        basis_rows_hi.0[j] = 1.0 / (c0 * dz_hi);
        basis_rows_hi.1[j] = tf.row_hi.chi_ze[j] / (c0 * tf.row_hi.chi_zz[j] * dz_hi);
    }

    let (hz, he) = (grid.h_zeta(), grid.h_eta());
    let build = |values: &[f64], lo: &[f64], hi: &[f64]| -> Result<Interp2> {
        Interp2::from_cells(
            values,
            grid.n_zeta,
            grid.n_eta,
            hz,
            he,
            0.5 * he,
            Some(lo),
            Some(hi),
        )
    };
    let interp = Pass2Interp {
        x: build(&grid.x, &grid.inner_row.x, &grid.outer_row.x)?,
        y: build(&grid.y, &grid.inner_row.y, &grid.outer_row.y)?,
        u_x: build(&duals.u_x, &forms_lo.u_x, &forms_hi.u_x)?,
        u_y: build(&duals.u_y, &forms_lo.u_y, &forms_hi.u_y)?,
        v_x: build(&duals.v_x, &forms_lo.v_x, &forms_hi.v_x)?,
        v_y: build(&duals.v_y, &forms_lo.v_y, &forms_hi.v_y)?,
        zeta_u: build(&basis.zeta_u, &basis_rows_lo.0, &basis_rows_hi.0)?,
        eta_u: build(&basis.eta_u, &basis_rows_lo.1, &basis_rows_hi.1)?,
    };

    // step 6: trace partial_v along zeta = 0; dv/deta there is c0 * integrand
    let integrand = c0_integrand(grid, &tf, ubar);
    let v_eta_spline = PeriodicSpline::new(&integrand, 0.5 * he, he);
    let h_v = std::f64::consts::TAU / n_v as f64;
    let v_nodes: Vec<f64> = (0..n_v).map(|j| (j as f64 + 0.5) * h_v).collect();
    let mut v_targets = v_nodes.clone();
    v_targets.push(std::f64::consts::TAU);
    let v_rhs = |_t: f64, s: &[f64; 1]| -> Result<[f64; 1]> {
        let val = c0 * v_eta_spline.eval(s[0]);
        if val.abs() <= f64::MIN_POSITIVE {
            return Err(GridError::DenominatorVanishing { x: s[0], y: 0.0 });
        }
        Ok([1.0 / val])
    };
    let mut eta_starts = vec![0.0; n_v];
    let mut eta_end = 0.0;
    ode::integrate_dense(&v_rhs, 0.0, &v_targets, [0.0], cfg, |k, s| {
        if k < n_v {
            eta_starts[k] = s[0];
        } else {
            eta_end = s[0];
        }
    })?;
    let v_closure_gap = (eta_end - std::f64::consts::TAU).abs();

    // step 7: trace partial_u from each start point to every u node
    let h_u = u1 / n_u as f64;
    let u_nodes: Vec<f64> = (0..n_u).map(|i| (i as f64 + 0.5) * h_u).collect();
    let mut u_targets = u_nodes.clone();
    u_targets.push(u1);
    let u_rhs = |_t: f64, s: &[f64; 2]| -> Result<[f64; 2]> {
        let dz = interp.zeta_u.eval(s[0], s[1])?;
        let de = interp.eta_u.eval(s[0], s[1])?;
        Ok([dz, de])
    };
    let traces: Vec<Result<Vec<(f64, f64)>>> = par::map_indexed(n_v, |j| {
        let mut pts = Vec::with_capacity(u_targets.len());
        ode::integrate_dense(&u_rhs, 0.0, &u_targets, [0.0, eta_starts[j]], cfg, |_, s| {
            pts.push((s[0], s[1]));
        })?;
        Ok(pts)
    });

    // step 8: interpolate the map and the Jacobian entries onto the traces
    let n = n_u * n_v;
    let mut out = EllipticGrid {
        n_u,
        n_v,
        u_nodes,
        v_nodes,
        x: vec![0.0; n],
        y: vec![0.0; n],
        u_x: vec![0.0; n],
        u_y: vec![0.0; n],
        v_x: vec![0.0; n],
        v_y: vec![0.0; n],
        c0,
        u1,
        psi0: grid.psi0,
        psi1: grid.psi1,
        frame: grid.frame,
        inner_row: UvBoundaryRow::default(),
        outer_row: UvBoundaryRow::default(),
        v_closure_gap,
    };
    let mut outer_pts = Vec::with_capacity(n_v);
    for (j, trace) in traces.into_iter().enumerate() {
        let trace = trace?;
        for i in 0..n_u {
            let (z, e) = trace[i];
            let k = out.idx(i, j);
            out.x[k] = interp.x.eval(z, e)?;
            out.y[k] = interp.y.eval(z, e)?;
            out.u_x[k] = interp.u_x.eval(z, e)?;
            out.u_y[k] = interp.u_y.eval(z, e)?;
            out.v_x[k] = interp.v_x.eval(z, e)?;
            out.v_y[k] = interp.v_y.eval(z, e)?;
        }
        outer_pts.push(trace[n_u]);
    }

    // boundary rows: the inner row lies exactly on zeta = 0 at eta_starts;
    // the outer row at the trace endpoints
    let row_spline = |vals: &[f64]| PeriodicSpline::new(vals, 0.5 * he, he);
    let splines_lo = [
        row_spline(&grid.inner_row.x),
        row_spline(&grid.inner_row.y),
        row_spline(&forms_lo.u_x),
        row_spline(&forms_lo.u_y),
        row_spline(&forms_lo.v_x),
        row_spline(&forms_lo.v_y),
    ];
    for j in 0..n_v {
        let e = eta_starts[j];
        out.inner_row.x.push(splines_lo[0].eval(e));
        out.inner_row.y.push(splines_lo[1].eval(e));
        out.inner_row.u_x.push(splines_lo[2].eval(e));
        out.inner_row.u_y.push(splines_lo[3].eval(e));
        out.inner_row.v_x.push(splines_lo[4].eval(e));
        out.inner_row.v_y.push(splines_lo[5].eval(e));
        let (z, e1) = outer_pts[j];
        out.outer_row.x.push(interp.x.eval(z, e1)?);
        out.outer_row.y.push(interp.y.eval(z, e1)?);
        out.outer_row.u_x.push(interp.u_x.eval(z, e1)?);
        out.outer_row.u_y.push(interp.u_y.eval(z, e1)?);
        out.outer_row.v_x.push(interp.v_x.eval(z, e1)?);
        out.outer_row.v_y.push(interp.v_y.eval(z, e1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{solve_ubar, SolverConfig};
    use crate::ortho::{generate_orthogonal, FirstLine, WeightMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn annulus_setup(
        nz: usize,
        ne: usize,
    ) -> (AnalyticField, FluxAlignedGrid, ScalarField2) {
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
        let (u, _) = solve_ubar(&g, &ChiSpec::Conformal, &f, &SolverConfig::default()).unwrap();
        (f, g, u)
    }

    #[test]
    fn c0_matches_annulus_log_modulus() {
        // c0 = ln(r1/r0) / (psi1 - psi0) = ln 2 / 1.5
        let f = AnalyticField::annulus();
        let g = generate_orthogonal(
            &f,
            0.5,
            2.0,
            256,
            16,
            WeightMode::Unity,
            FirstLine::Inner,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let (u, _) = solve_ubar(&g, &ChiSpec::Conformal, &f, &SolverConfig::default()).unwrap();
        let tf = transform_fields(&g, &ChiSpec::Conformal, &f).unwrap();
        let c0 = compute_c0(&g, &tf, &u).unwrap();
        let expect = 2.0_f64.ln() / 1.5;
        // the solve is second order: ~8e-6 relative at 256 radial cells
        assert!(
            (c0 - expect).abs() < 2e-5 * expect,
            "c0 = {c0}, expected {expect}"
        );
    }

    #[test]
    fn c0_scales_inversely_with_ubar() {
        // doubling ubar (and its boundary data) halves c0, leaving
        // u1 = c0 (psi1' - psi0') unchanged only through the psi difference;
        // here we check pure homogeneity of the quadrature
        let (f, g, u) = annulus_setup(16, 16);
        let tf = transform_fields(&g, &ChiSpec::Conformal, &f).unwrap();
        let c0 = compute_c0(&g, &tf, &u).unwrap();
        let mut doubled = u.clone();
        for v in doubled
            .values
            .iter_mut()
            .chain(doubled.d_zeta.iter_mut())
            .chain(doubled.d_eta.iter_mut())
            .chain(doubled.dz_lo.iter_mut())
            .chain(doubled.dz_hi.iter_mut())
        {
            *v *= 2.0;
        }
        let c0_doubled = compute_c0(&g, &tf, &doubled).unwrap();
        assert!((c0_doubled - 0.5 * c0).abs() < 1e-14);
    }

    #[test]
    fn dual_and_basis_are_dual_pairings() {
        let (f, g, u) = annulus_setup(12, 24);
        let tf = transform_fields(&g, &ChiSpec::monitor_default(), &f).unwrap();
        let c0 = compute_c0(&g, &tf, &u).unwrap();
        let duals = dual_derivatives(&g, &tf, &u, c0);
        let basis = basis_fields(&g, &tf, &u, c0).unwrap();
        for k in 0..g.n_zeta * g.n_eta {
            let du_pu = duals.u_zeta[k] * basis.zeta_u[k] + duals.u_eta[k] * basis.eta_u[k];
            let du_pv = duals.u_zeta[k] * basis.zeta_v[k] + duals.u_eta[k] * basis.eta_v[k];
            let dv_pu = duals.v_zeta[k] * basis.zeta_u[k] + duals.v_eta[k] * basis.eta_u[k];
            let dv_pv = duals.v_zeta[k] * basis.zeta_v[k] + duals.v_eta[k] * basis.eta_v[k];
            assert!((du_pu - 1.0).abs() < 1e-10, "<du, du_u> = {du_pu}");
            assert!(du_pv.abs() < 1e-10);
            assert!(dv_pu.abs() < 1e-10);
            assert!((dv_pv - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_matrix_is_inverse_of_dual_matrix() {
        // brute-force 2x2 oracle on random spd chi and random gradients
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let uz: f64 = rng.gen_range(0.2..2.0);
            let ue: f64 = rng.gen_range(-1.0..1.0);
            let a: f64 = rng.gen_range(0.5..2.0);
            let c: f64 = rng.gen_range(0.5..2.0);
            let b: f64 = rng.gen_range(-0.9..0.9) * (a * c).sqrt();
            let sg: f64 = rng.gen_range(0.3..3.0);
            let c0: f64 = rng.gen_range(0.2..4.0);
            // du, dv rows
            let du = (c0 * uz, c0 * ue);
            let dv = (-c0 * sg * (b * uz + c * ue), c0 * sg * (a * uz + b * ue));
            let denom = uz * uz * a + 2.0 * uz * ue * b + ue * ue * c;
            let pu = ((a * uz + b * ue) / (c0 * denom), (b * uz + c * ue) / (c0 * denom));
            let pv = (-ue / (c0 * sg * denom), uz / (c0 * sg * denom));
            // matrix [du; dv] times matrix [pu pv] must be the identity
            let m = [
                du.0 * pu.0 + du.1 * pu.1,
                du.0 * pv.0 + du.1 * pv.1,
                dv.0 * pu.0 + dv.1 * pu.1,
                dv.0 * pv.0 + dv.1 * pv.1,
            ];
            assert!((m[0] - 1.0).abs() < 1e-10 && (m[3] - 1.0).abs() < 1e-10);
            assert!(m[1].abs() < 1e-10 && m[2].abs() < 1e-10);
        }
    }

    #[test]
    fn dv_has_no_zeta_component_on_the_inner_boundary() {
        let (f, g, u) = annulus_setup(12, 24);
        for spec in [ChiSpec::Conformal, ChiSpec::Adapted { weight: WeightMode::GradPsi }] {
            let tf = transform_fields(&g, &spec, &f).unwrap();
            for j in 0..g.n_eta {
                // v_zeta on the row is -c0 sqrt(g) chi^{eta zeta} ubar_zeta: zero
                // since chi is diagonal on the orthogonal pass-1 grid
                let scale = (tf.row_lo.chi_zz[j] * tf.row_lo.chi_ee[j]).sqrt();
                assert!(tf.row_lo.chi_ze[j].abs() <= 1e-12 * scale);
            }
            let _ = &u;
        }
    }

    #[test]
    fn annulus_conformal_grid_matches_log_polar_map() {
        // the full pipeline against x = r0 e^u cos v at a finer solve lattice
        let f = AnalyticField::annulus();
        let g = generate_orthogonal(
            &f,
            0.5,
            2.0,
            192,
            16,
            WeightMode::Unity,
            FirstLine::Inner,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let (u, _) = solve_ubar(&g, &ChiSpec::Conformal, &f, &SolverConfig::default()).unwrap();
        let eg = generate_elliptic(
            &f,
            &g,
            &u,
            &ChiSpec::Conformal,
            8,
            32,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!((eg.u1 - 2.0_f64.ln()).abs() < 5e-5);
        let mut worst: f64 = 0.0;
        for i in 0..eg.n_u {
            let r = 1.0 * (eg.u_nodes[i]).exp();
            for j in 0..eg.n_v {
                let k = eg.idx(i, j);
                let v = eg.v_nodes[j];
                worst = worst
                    .max((eg.x[k] - r * v.cos()).abs())
                    .max((eg.y[k] - r * v.sin()).abs());
            }
        }
        assert!(worst < 2e-4, "deviation from exact conformal map: {worst}");
        assert!(eg.v_closure_gap < 1e-9 * TAU);
    }

    #[test]
    fn elliptic_generation_requires_right_handed_pass1() {
        let f = AnalyticField::annulus();
        let g = generate_orthogonal(
            &f,
            2.0,
            0.5,
            8,
            16,
            WeightMode::Unity,
            FirstLine::Inner,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let (u, _) = solve_ubar(&g, &ChiSpec::Conformal, &f, &SolverConfig::default()).unwrap();
        assert!(matches!(
            generate_elliptic(&f, &g, &u, &ChiSpec::Conformal, 4, 8, &IntegratorConfig::default()),
            Err(GridError::Config(_))
        ));
    }
}
