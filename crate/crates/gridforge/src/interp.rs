//! Finite-difference weights and cubic-spline interpolation on the
//! cell-centered computational lattice.
//!
//! The 2D interpolant is a tensor-product cubic B-spline: periodic in the
//! angle direction, extended by two ghost rows beyond each radial boundary so
//! that evaluation stays valid one cell outside the box. Ghost rows are
//! filled by cubic extrapolation through the exact boundary value when one is
//! available.

use crate::error::{GridError, Result};

/// Fornberg weights: `w` such that `sum w_i f(nodes_i)` approximates the
/// `m`-th derivative of `f` at `x0` (m = 0 gives interpolation weights).
pub fn fd_weights(nodes: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Tridiagonal solve (Thomas), overwriting `rhs` with the solution.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut dp = diag[0];
    cp[0] = sup[0] / dp;
    rhs[0] /= dp;
    for i in 1..n {
        dp = diag[i] - sub[i] * cp[i - 1];
        cp[i] = if i + 1 < n { sup[i] / dp } else { 0.0 };
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / dp;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
}

/// Periodic cubic B-spline coefficients on a uniform lattice:
/// `(c_{j-1} + 4 c_j + c_{j+1}) / 6 = f_j` cyclically (Sherman-Morrison).
fn periodic_spline_coeffs(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "periodic spline needs at least 4 nodes");
    let (a, b, g) = (1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0);
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - a * g / gamma;
    let sub = vec![a; n];
    let sup = vec![g; n];
    let mut x = f.to_vec();
    thomas(&sub, &diag, &sup, &mut x);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = a;
    thomas(&sub, &diag, &sup, &mut u);
    let vx = x[0] + g / gamma * x[n - 1];
    let vu = u[0] + g / gamma * u[n - 1];
    let factor = vx / (1.0 + vu);
    for i in 0..n {
        x[i] -= factor * u[i];
    }
    x
}

/// Clamped cubic B-spline coefficients with end slopes estimated from the
/// data by one-sided 5-point stencils (keeps the spline fourth order up to
/// the ends). Returns n + 2 values with the phantom coefficients `c_{-1}`
/// and `c_n` materialized.
fn clamped_spline_coeffs(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "spline needs at least 5 nodes");
    let end_nodes: Vec<f64> = (0..5).map(|k| k as f64 * h).collect();
    let w = fd_weights(&end_nodes, 0.0, 1);
    let d0: f64 = (0..5).map(|k| w[k] * f[k]).sum();
    let d1: f64 = (0..5).map(|k| -w[k] * f[n - 1 - k]).sum();
    // rows: 2 c_0 + c_1 = 3 f_0 + h d0; (1 4 1) c = 6 f; c_{n-2} + 2 c_{n-1} = 3 f_{n-1} - h d1
    let mut rhs: Vec<f64> = f.iter().map(|v| 6.0 * v).collect();
    rhs[0] = 3.0 * f[0] + h * d0;
    rhs[n - 1] = 3.0 * f[n - 1] - h * d1;
    let mut diag = vec![4.0; n];
    diag[0] = 2.0;
    diag[n - 1] = 2.0;
    let sub = vec![1.0; n];
    let sup = vec![1.0; n];
    thomas(&sub, &diag, &sup, &mut rhs);
    let mut c = Vec::with_capacity(n + 2);
    c.push(rhs[1] - 2.0 * h * d0);
    c.extend_from_slice(&rhs);
    c.push(rhs[n - 2] + 2.0 * h * d1);
    c
}

/// The four cubic B-spline segment polynomials on `u in [0, 1]`.
#[inline]
fn bspline_basis(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

/// Periodic cubic spline of a sampled function of one angle-like variable.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    coeff: Vec<f64>,
    x_first: f64,
    h: f64,
}

impl PeriodicSpline {
    /// Interpolate values at `x_first + j h`, period `n h`.
    pub fn new(values: &[f64], x_first: f64, h: f64) -> Self {
        PeriodicSpline { coeff: periodic_spline_coeffs(values), x_first, h }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeff.len();
        let t = (x - self.x_first) / self.h;
        let k = t.floor();
        let u = t - k;
        let k = k as i64;
        let b = bspline_basis(u);
        let mut acc = 0.0;
        for (m, bm) in b.iter().enumerate() {
            let idx = (k + m as i64 - 1).rem_euclid(n as i64) as usize;
            acc += bm * self.coeff[idx];
        }
        acc
    }

    /// Exact integral of the spline over one period: equals `h * sum(values)`
    /// because the interpolation matrix rows sum to one.
    pub fn integral_over_period(values: &[f64], h: f64) -> f64 {
        h * values.iter().sum::<f64>()
    }
}

/// Bicubic spline on the (zeta, eta) cell-center lattice; periodic in eta,
/// ghost-extended and clamped to one extra cell in zeta.
#[derive(Debug, Clone)]
pub struct Interp2 {
    /// Coefficients, (n1_ext + 2) x n2, second index fastest.
    coeff: Vec<f64>,
    n1_ext: usize,
    n2: usize,
    /// First extended data row location (zeta of ghost row -2).
    x1_first: f64,
    h1: f64,
    x2_first: f64,
    h2: f64,
    x1_lo: f64,
    x1_hi: f64,
}

impl Interp2 {
    /// Build from `n1 x n2` cell values (second index fastest). `row_lo` and
    /// `row_hi`, when given, are exact values on the `zeta = 0` and
    /// `zeta = zeta1` boundary lines used to anchor the ghost rows.
    pub fn from_cells(
        values: &[f64],
        n1: usize,
        n2: usize,
        h1: f64,
        h2: f64,
        x2_first: f64,
        row_lo: Option<&[f64]>,
        row_hi: Option<&[f64]>,
    ) -> Result<Self> {
        if values.len() != n1 * n2 {
            return Err(GridError::LatticeMismatch(format!(
                "expected {} values, got {}",
                n1 * n2,
                values.len()
            )));
        }
        if n1 < 4 || n2 < 4 {
            return Err(GridError::LatticeMismatch(
                "interpolation needs at least 4 cells per direction".into(),
            ));
        }
        let n1_ext = n1 + 4;
        let mut data = vec![0.0; n1_ext * n2];
        for i in 0..n1 {
            let src = &values[i * n2..(i + 1) * n2];
            data[(i + 2) * n2..(i + 3) * n2].copy_from_slice(src);
        }
        // ghost rows: cubic through (boundary value, first three cells),
        // or through the first four cells when no boundary data exists
        let lo_w = ghost_weights(row_lo.is_some(), h1, true);
        let hi_w = ghost_weights(row_hi.is_some(), h1, false);
        for j in 0..n2 {
            let mut lo_nodes = [0.0; 4];
            let mut hi_nodes = [0.0; 4];
            for k in 0..4 {
                if let Some(row) = row_lo {
                    lo_nodes[k] = if k == 0 { row[j] } else { values[(k - 1) * n2 + j] };
                } else {
                    lo_nodes[k] = values[k * n2 + j];
                }
                if let Some(row) = row_hi {
                    hi_nodes[k] =
                        if k == 0 { row[j] } else { values[(n1 - k) * n2 + j] };
                } else {
                    hi_nodes[k] = values[(n1 - 1 - k) * n2 + j];
                }
            }
            for g in 0..2 {
                let mut lo = 0.0;
                let mut hi = 0.0;
                for k in 0..4 {
                    lo += lo_w[g][k] * lo_nodes[k];
                    hi += hi_w[g][k] * hi_nodes[k];
                }
                // g = 0 is the nearer ghost row
                data[(1 - g) * n2 + j] = lo;
                data[(n1 + 2 + g) * n2 + j] = hi;
            }
        }
        // eta direction: periodic spline per extended row
        let mut stage = vec![0.0; n1_ext * n2];
        for i in 0..n1_ext {
            let row = periodic_spline_coeffs(&data[i * n2..(i + 1) * n2]);
            stage[i * n2..(i + 1) * n2].copy_from_slice(&row);
        }
        // zeta direction: natural spline per column, phantoms included
        let mut coeff = vec![0.0; (n1_ext + 2) * n2];
        let mut col = vec![0.0; n1_ext];
        for j in 0..n2 {
            for i in 0..n1_ext {
                col[i] = stage[i * n2 + j];
            }
            let c = clamped_spline_coeffs(&col, h1);
            for (i, &ci) in c.iter().enumerate() {
                coeff[i * n2 + j] = ci;
            }
        }
        let zeta1 = n1 as f64 * h1;
        Ok(Interp2 {
            coeff,
            n1_ext,
            n2,
            x1_first: -1.5 * h1,
            h1,
            x2_first,
            h2,
            x1_lo: -h1,
            x1_hi: zeta1 + h1,
        })
    }

    /// Evaluate at `(x1, x2)`; `x2` wraps periodically, `x1` may exceed the
    /// box by at most one cell.
    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        if !(self.x1_lo..=self.x1_hi).contains(&x1) {
            return Err(GridError::OutOfBox { zeta: x1, eta: x2 });
        }
        let t1 = (x1 - self.x1_first) / self.h1;
        let k1 = (t1.floor() as i64).clamp(0, self.n1_ext as i64 - 2);
        let u1 = t1 - k1 as f64;
        let b1 = bspline_basis(u1);
        let t2 = (x2 - self.x2_first) / self.h2;
        let k2 = t2.floor();
        let u2 = t2 - k2;
        let k2 = k2 as i64;
        let b2 = bspline_basis(u2);
        let mut acc = 0.0;
        for (a, ba) in b1.iter().enumerate() {
            // coefficient storage row for data row r is r + 1 (phantom at 0)
            let row = (k1 as usize + a) * self.n2;
            let mut acc2 = 0.0;
            for (b, bb) in b2.iter().enumerate() {
                let jj = (k2 + b as i64 - 1).rem_euclid(self.n2 as i64) as usize;
                acc2 += bb * self.coeff[row + jj];
            }
            acc += ba * acc2;
        }
        Ok(acc)
    }
}

/// Lagrange weights placing the two ghost rows from four anchor values.
///
/// With a boundary value the anchors sit at 0, h/2, 3h/2, 5h/2 (inner side);
/// without, at h/2 .. 7h/2. Ghost rows are at -h/2 and -3h/2.
fn ghost_weights(with_boundary: bool, h: f64, lower: bool) -> [[f64; 4]; 2] {
    let nodes: Vec<f64> = if with_boundary {
        vec![0.0, 0.5 * h, 1.5 * h, 2.5 * h]
    } else {
        vec![0.5 * h, 1.5 * h, 2.5 * h, 3.5 * h]
    };
    let sign = if lower { -1.0 } else { 1.0 };
    let _ = sign; // geometry is mirror-symmetric; weights depend on offsets only
    let g0 = fd_weights(&nodes, -0.5 * h, 0);
    let g1 = fd_weights(&nodes, -1.5 * h, 0);
    [
        [g0[0], g0[1], g0[2], g0[3]],
        [g1[0], g1[1], g1[2], g1[3]],
    ]
}
