//! Cell-centered divergence-form discretization of
//! `d_i (D^{ij} d_j u) = s` on the computational rectangle, plus a Jacobi
//! preconditioned conjugate-gradient solver.
//!
//! The operator is assembled as the Hessian of a discrete energy: face terms
//! for the diagonal coefficients, corner terms for the mixed coefficient.
//! That construction makes the matrix symmetric by construction for every
//! combination of Dirichlet, Neumann and periodic boundaries, which the
//! conjugate gradient iteration requires. Mixed-term corners on a Dirichlet
//! or Neumann boundary drop out identically: the boundary data is constant
//! along the boundary, respectively the reflected ghost kills the normal
//! gradient.

use crate::error::{GridError, Result};
use crate::par;

/// Boundary condition on a zeta-side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    /// Fixed value on the boundary face (constant along the boundary).
    Dirichlet(f64),
    /// Zero conormal flux through the boundary face.
    Neumann,
}

/// Problem data: `n1 x n2` cells (second index fastest, periodic), uniform
/// spacings, per-cell tensor `D`, boundary-face `D^{11}` rows, and an
/// optional source (already multiplied by the volume element).
pub struct DivFormProblem {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub d11: Vec<f64>,
    pub d12: Vec<f64>,
    pub d22: Vec<f64>,
    /// `D^{11}` on the lower boundary face, one value per eta index.
    pub d11_lo: Vec<f64>,
    pub d11_hi: Vec<f64>,
    pub bc_lo: BcKind,
    pub bc_hi: BcKind,
    pub source: Option<Vec<f64>>,
}

/// Assembled stencil coefficients.
pub struct Operator {
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
    /// zeta-face coefficients, (n1 + 1) x n2; rows 0 and n1 are boundary faces.
    cf1: Vec<f64>,
    /// eta-face coefficients, n1 x n2; entry (i, m) couples cells (i, m-1)
    /// and (i, m).
    cf2: Vec<f64>,
    /// corner weights `D^{12} h1 h2`, (n1 + 1) x n2, zero on boundary rows.
    w: Vec<f64>,
    pub rhs: Vec<f64>,
    diag: Vec<f64>,
    bc_lo: BcKind,
    bc_hi: BcKind,
}

/// Convergence report of the CG iteration.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

impl DivFormProblem {
    pub fn assemble(&self) -> Operator {
        let (n1, n2) = (self.n1, self.n2);
        let (h1, h2) = (self.h1, self.h2);
        assert_eq!(self.d11.len(), n1 * n2);
        let mut cf1 = vec![0.0; (n1 + 1) * n2];
        for j in 0..n2 {
            cf1[j] = match self.bc_lo {
                BcKind::Dirichlet(_) => 2.0 * self.d11_lo[j] * h2 / h1,
                BcKind::Neumann => 0.0,
            };
            cf1[n1 * n2 + j] = match self.bc_hi {
                BcKind::Dirichlet(_) => 2.0 * self.d11_hi[j] * h2 / h1,
                BcKind::Neumann => 0.0,
            };
        }
        for k in 1..n1 {
            for j in 0..n2 {
                let d = 0.5 * (self.d11[(k - 1) * n2 + j] + self.d11[k * n2 + j]);
                cf1[k * n2 + j] = d * h2 / h1;
            }
        }
        let mut cf2 = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for m in 0..n2 {
                let jm = (m + n2 - 1) % n2;
                let d = 0.5 * (self.d22[i * n2 + jm] + self.d22[i * n2 + m]);
                cf2[i * n2 + m] = d * h1 / h2;
            }
        }
        let mut w = vec![0.0; (n1 + 1) * n2];
        for k in 1..n1 {
            for m in 0..n2 {
                let jm = (m + n2 - 1) % n2;
                let d = 0.25
                    * (self.d12[(k - 1) * n2 + jm]
                        + self.d12[(k - 1) * n2 + m]
                        + self.d12[k * n2 + jm]
                        + self.d12[k * n2 + m]);
                w[k * n2 + m] = d * h1 * h2;
            }
        }
        // right-hand side: Dirichlet face terms minus the volume source
        let mut rhs = vec![0.0; n1 * n2];
        if let BcKind::Dirichlet(g) = self.bc_lo {
            for j in 0..n2 {
                rhs[j] += cf1[j] * g;
            }
        }
        if let BcKind::Dirichlet(g) = self.bc_hi {
            for j in 0..n2 {
                rhs[(n1 - 1) * n2 + j] += cf1[n1 * n2 + j] * g;
            }
        }
        if let Some(src) = &self.source {
            for (r, s) in rhs.iter_mut().zip(src) {
                *r -= s * h1 * h2;
            }
        }
        // diagonal: face part is always positive; the corner part is added
        // only where it keeps the entry positive
        let mut diag = vec![0.0; n1 * n2];
        let corner_scale = 1.0 / (2.0 * h1 * h2);
        for i in 0..n1 {
            for j in 0..n2 {
                let jp = (j + 1) % n2;
                let face = cf1[i * n2 + j]
                    + cf1[(i + 1) * n2 + j]
                    + cf2[i * n2 + j]
                    + cf2[i * n2 + jp];
                let corner = (w[i * n2 + j] - w[(i + 1) * n2 + j] - w[i * n2 + jp]
                    + w[(i + 1) * n2 + jp])
                    * corner_scale;
                let d = face + corner;
                diag[i * n2 + j] = if d > 0.0 { d } else { face.max(f64::MIN_POSITIVE) };
            }
        }
        Operator {
            n1,
            n2,
            h1,
            h2,
            cf1,
            cf2,
            w,
            rhs,
            diag,
            bc_lo: self.bc_lo,
            bc_hi: self.bc_hi,
        }
    }
}

/// Scratch buffers reused across operator applications.
#[derive(Default)]
pub struct CornerScratch {
    wz: Vec<f64>,
    we: Vec<f64>,
}

impl Operator {
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Apply the homogeneous operator: `out = A u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64], scratch: &mut CornerScratch) {
        let (n1, n2) = (self.n1, self.n2);
        let (h1, h2) = (self.h1, self.h2);
        scratch.wz.resize((n1 + 1) * n2, 0.0);
        scratch.we.resize((n1 + 1) * n2, 0.0);
        {
            let w = &self.w;
            par::fill_indexed(&mut scratch.wz, |idx| {
                let k = idx / n2;
                if k == 0 || k == n1 || w[idx] == 0.0 {
                    return 0.0;
                }
                let m = idx % n2;
                let jm = (m + n2 - 1) % n2;
                let a = u[(k - 1) * n2 + jm];
                let b = u[(k - 1) * n2 + m];
                let c = u[k * n2 + jm];
                let d = u[k * n2 + m];
                w[idx] * ((c + d - a - b) / (2.0 * h1))
            });
            par::fill_indexed(&mut scratch.we, |idx| {
                let k = idx / n2;
                if k == 0 || k == n1 || w[idx] == 0.0 {
                    return 0.0;
                }
                let m = idx % n2;
                let jm = (m + n2 - 1) % n2;
                let a = u[(k - 1) * n2 + jm];
                let b = u[(k - 1) * n2 + m];
                let c = u[k * n2 + jm];
                let d = u[k * n2 + m];
                w[idx] * ((b + d - a - c) / (2.0 * h2))
            });
        }
        let (wz, we) = (&scratch.wz, &scratch.we);
        let (cf1, cf2) = (&self.cf1, &self.cf2);
        par::fill_indexed(out, |idx| {
            let i = idx / n2;
            let j = idx % n2;
            let jp = (j + 1) % n2;
            let jm = (j + n2 - 1) % n2;
            let uij = u[idx];
            let mut acc = 0.0;
            let c_lo = cf1[i * n2 + j];
            acc += if i > 0 { c_lo * (uij - u[idx - n2]) } else { c_lo * uij };
            let c_hi = cf1[(i + 1) * n2 + j];
            acc += if i + 1 < n1 { c_hi * (uij - u[idx + n2]) } else { c_hi * uij };
            acc += cf2[i * n2 + j] * (uij - u[i * n2 + jm]);
            acc += cf2[i * n2 + jp] * (uij - u[i * n2 + jp]);
            acc += we[i * n2 + j] / (2.0 * h1) + wz[i * n2 + j] / (2.0 * h2);
            acc += -we[(i + 1) * n2 + j] / (2.0 * h1) + wz[(i + 1) * n2 + j] / (2.0 * h2);
            acc += we[i * n2 + jp] / (2.0 * h1) - wz[i * n2 + jp] / (2.0 * h2);
            acc += -we[(i + 1) * n2 + jp] / (2.0 * h1) - wz[(i + 1) * n2 + jp] / (2.0 * h2);
            acc
        });
    }

    /// Jacobi-preconditioned conjugate gradient solve of `A u = rhs`;
    /// converges when `||r|| <= tol * ||rhs||`.
    pub fn solve_cg(
        &self,
        x0: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.len();
        let b_norm = par::dot(&self.rhs, &self.rhs).sqrt();
        if b_norm == 0.0 {
            return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
        }
        let mut x = match x0 {
            Some(v) => v.to_vec(),
            None => vec![0.0; n],
        };
        let mut scratch = CornerScratch::default();
        let mut r = vec![0.0; n];
        self.apply(&x, &mut r, &mut scratch);
        par::xpby(&mut r, -1.0, &self.rhs);
        let mut z = vec![0.0; n];
        par::pointwise_div(&mut z, &r, &self.diag);
        let mut p = z.clone();
        let mut rz = par::dot(&r, &z);
        let mut q = vec![0.0; n];
        let target = tol * b_norm;
        for it in 0..max_iter {
            let r_norm = par::dot(&r, &r).sqrt();
            if r_norm <= target {
                return Ok((x, SolveStats { iterations: it, residual: r_norm / b_norm }));
            }
            self.apply(&p, &mut q, &mut scratch);
            let pq = par::dot(&p, &q);
            if pq <= 0.0 {
                return Err(GridError::IndefiniteOperator { pap: pq });
            }
            let alpha = rz / pq;
            par::axpy(&mut x, alpha, &p);
            par::axpy(&mut r, -alpha, &q);
            par::pointwise_div(&mut z, &r, &self.diag);
            let rz_new = par::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            par::xpby(&mut p, beta, &z);
        }
        let r_norm = par::dot(&r, &r).sqrt();
        Err(GridError::NonConvergence { residual: r_norm / b_norm, iterations: max_iter })
    }

    /// Total flux through the zeta-face ring at face index `k` in `0..=n1`,
    /// for problems with a diagonal coefficient tensor. Constant across `k`
    /// for a source-free divergence-form solution, up to the solver residual.
    pub fn ring_flux(&self, u: &[f64], k: usize) -> f64 {
        let n2 = self.n2;
        let mut total = 0.0;
        for j in 0..n2 {
            let c = self.cf1[k * n2 + j];
            let jump = if k == 0 {
                match self.bc_lo {
                    BcKind::Dirichlet(g) => u[j] - g,
                    BcKind::Neumann => 0.0,
                }
            } else if k == self.n1 {
                match self.bc_hi {
                    BcKind::Dirichlet(g) => g - u[(self.n1 - 1) * n2 + j],
                    BcKind::Neumann => 0.0,
                }
            } else {
                u[k * n2 + j] - u[(k - 1) * n2 + j]
            };
            total += c * jump;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn laplace_linear_profile_is_exact() {
        let n1 = 8;
        let n2 = 8;
        let p = DivFormProblem {
            n1,
            n2,
            h1: 1.0 / n1 as f64,
            h2: std::f64::consts::TAU / n2 as f64,
            d11: vec![1.0; n1 * n2],
            d12: vec![0.0; n1 * n2],
            d22: vec![1.0; n1 * n2],
            d11_lo: vec![1.0; n2],
            d11_hi: vec![1.0; n2],
            bc_lo: BcKind::Dirichlet(0.0),
            bc_hi: BcKind::Dirichlet(1.0),
            source: None,
        };
        let op = p.assemble();
        let (u, stats) = op.solve_cg(None, 1e-13, 10_000).unwrap();
        for i in 0..n1 {
            let expect = (i as f64 + 0.5) / n1 as f64;
            for j in 0..n2 {
                assert!((u[i * n2 + j] - expect).abs() < 1e-10);
            }
        }
        assert!(stats.residual <= 1e-13);
        // flux through every ring is the same
        let f0 = op.ring_flux(&u, 0);
        for k in 1..=n1 {
            assert!((op.ring_flux(&u, k) - f0).abs() < 1e-10 * f0.abs());
        }
    }

    #[test]
    fn operator_is_symmetric_with_mixed_terms() {
        let n1 = 6;
        let n2 = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = n1 * n2;
        let mut d11 = vec![0.0; n];
        let mut d12 = vec![0.0; n];
        let mut d22 = vec![0.0; n];
        for i in 0..n {
            let a: f64 = 1.0 + rng.gen_range(0.0..2.0);
            let c: f64 = 1.0 + rng.gen_range(0.0..2.0);
            d12[i] = rng.gen_range(-0.8..0.8) * (a * c).sqrt();
            d11[i] = a;
            d22[i] = c;
        }
        let p = DivFormProblem {
            n1,
            n2,
            h1: 0.2,
            h2: 0.7,
            d11,
            d12,
            d22,
            d11_lo: vec![1.0; n2],
            d11_hi: vec![1.0; n2],
            bc_lo: BcKind::Dirichlet(0.0),
            bc_hi: BcKind::Neumann,
            source: None,
        };
        let op = p.assemble();
        let mut scratch = CornerScratch::default();
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut av = vec![0.0; n];
            let mut aw = vec![0.0; n];
            op.apply(&v, &mut av, &mut scratch);
            op.apply(&w, &mut aw, &mut scratch);
            let avw = par::dot(&av, &w);
            let vaw = par::dot(&v, &aw);
            let scale = par::dot(&av, &av).sqrt() * par::dot(&w, &w).sqrt() + 1e-30;
            assert!(
                (avw - vaw).abs() <= 1e-12 * scale,
                "symmetry defect {} at scale {}",
                (avw - vaw).abs(),
                scale
            );
        }
    }

    #[test]
    fn manufactured_solution_second_order() {
        use std::f64::consts::TAU;
        let mut errs = Vec::new();
        for &n1 in &[16usize, 32] {
            let n2 = 8;
            let h1 = 1.0 / n1 as f64;
            let exact = |x: f64| (TAU * x).sin();
            let src: Vec<f64> = (0..n1 * n2)
                .map(|idx| {
                    let x = ((idx / n2) as f64 + 0.5) * h1;
                    -TAU * TAU * (TAU * x).sin()
                })
                .collect();
            let p = DivFormProblem {
                n1,
                n2,
                h1,
                h2: 1.0,
                d11: vec![1.0; n1 * n2],
                d12: vec![0.0; n1 * n2],
                d22: vec![1.0; n1 * n2],
                d11_lo: vec![1.0; n2],
                d11_hi: vec![1.0; n2],
                bc_lo: BcKind::Dirichlet(0.0),
                bc_hi: BcKind::Dirichlet(0.0),
                source: Some(src),
            };
            let op = p.assemble();
            let (u, _) = op.solve_cg(None, 1e-12, 20_000).unwrap();
            let mut err: f64 = 0.0;
            for i in 0..n1 {
                let x = (i as f64 + 0.5) * h1;
                err = err.max((u[i * n2] - exact(x)).abs());
            }
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.7, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn neumann_natural_condition_second_order() {
        // u = cos(pi x) on [0, 1]: u'(1) = 0 (Neumann side), u(0) = 1.
        use std::f64::consts::PI;
        let mut errs = Vec::new();
        for &n1 in &[16usize, 32] {
            let n2 = 4;
            let h1 = 1.0 / n1 as f64;
            let src: Vec<f64> = (0..n1 * n2)
                .map(|idx| {
                    let x = ((idx / n2) as f64 + 0.5) * h1;
                    -PI * PI * (PI * x).cos()
                })
                .collect();
            let p = DivFormProblem {
                n1,
                n2,
                h1,
                h2: 1.0,
                d11: vec![1.0; n1 * n2],
                d12: vec![0.0; n1 * n2],
                d22: vec![1.0; n1 * n2],
                d11_lo: vec![1.0; n2],
                d11_hi: vec![1.0; n2],
                bc_lo: BcKind::Dirichlet(1.0),
                bc_hi: BcKind::Neumann,
                source: Some(src),
            };
            let op = p.assemble();
            let (u, _) = op.solve_cg(None, 1e-12, 20_000).unwrap();
            let mut err: f64 = 0.0;
            for i in 0..n1 {
                let x = (i as f64 + 0.5) * h1;
                err = err.max((u[i * n2] - (PI * x).cos()).abs());
            }
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.7, "observed order {order}, errors {errs:?}");
    }
}
