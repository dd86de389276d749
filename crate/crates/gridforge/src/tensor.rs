//! 2x2 tensor calculus: Jacobians, volume forms, metrics and push-forwards.
//!
//! Conventions: a "forward" Jacobian holds the gradients of the new
//! coordinates, row 1 = (zeta_x, zeta_y), row 2 = (eta_x, eta_y). Its inverse
//! holds (x_zeta, x_eta; y_zeta, y_eta). Tensors are stored contravariant;
//! covariant components are derived on demand.

use crate::error::{GridError, Result};

/// Relative singularity threshold on determinants, scaled by `scale^2`.
pub const SINGULARITY_EPS: f64 = 1e-14;

/// 2x2 Jacobian matrix of a coordinate transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    /// Forward Jacobian from the gradients of the new coordinates.
    pub fn from_gradients(zx: f64, zy: f64, ex: f64, ey: f64) -> Self {
        Self::new(zx, zy, ex, ey)
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Matrix product `self * rhs` (composition of linear maps).
    pub fn compose(&self, rhs: &Jacobian2) -> Jacobian2 {
        Jacobian2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }

    /// Apply to a (contravariant) vector.
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (self.a11 * v.0 + self.a12 * v.1, self.a21 * v.0 + self.a22 * v.1)
    }
}

/// Symmetric 2x2 tensor, contravariant components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::new(s, 0.0, s)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.yy > 0.0 && self.det() > 0.0
    }

    /// Quadratic form `c_i chi^{ij} c_j` on a covector.
    pub fn quadratic(&self, c: (f64, f64)) -> f64 {
        self.xx * c.0 * c.0 + 2.0 * self.xy * c.0 * c.1 + self.yy * c.1 * c.1
    }
}

/// Inverse metric components with the volume element.
#[derive(Debug, Clone, Copy)]
pub struct Metric2 {
    pub g_uu: f64,
    pub g_uv: f64,
    pub g_vv: f64,
    /// Volume element, `(g_uu g_vv - g_uv^2)^{-1/2}`; always positive.
    pub sqrt_g: f64,
}

/// Invert a Jacobian by the cofactor formula.
///
/// `scale` is a caller-supplied length scale; determinants below
/// `SINGULARITY_EPS * scale^2` are rejected.
pub fn invert_jacobian(fwd: &Jacobian2, scale: f64) -> Result<Jacobian2> {
    let det = fwd.det();
    let threshold = SINGULARITY_EPS * scale * scale;
    if det.abs() <= threshold || !det.is_finite() {
        return Err(GridError::SingularJacobian { det, threshold });
    }
    Ok(Jacobian2::new(
        fwd.a22 / det,
        -fwd.a12 / det,
        -fwd.a21 / det,
        fwd.a11 / det,
    ))
}

/// Signed volume element of the map described by `fwd`.
///
/// For a Jacobian holding (x_zeta, x_eta; y_zeta, y_eta) this is
/// `sqrt(g) = x_zeta y_eta - y_zeta x_eta`; for the forward gradients it is
/// the reciprocal of `sqrt(g)`. Positive for right-handed maps.
pub fn volume_element(fwd: &Jacobian2, scale: f64) -> Result<f64> {
    let det = fwd.det();
    let threshold = SINGULARITY_EPS * scale * scale;
    if det.abs() <= threshold || !det.is_finite() {
        return Err(GridError::SingularJacobian { det, threshold });
    }
    Ok(det)
}

/// Inverse metric from coordinate gradients in a Cartesian frame.
pub fn inverse_metric_from_gradients(zx: f64, zy: f64, ex: f64, ey: f64) -> Result<Metric2> {
    let g_uu = zx * zx + zy * zy;
    let g_uv = zx * ex + zy * ey;
    let g_vv = ex * ex + ey * ey;
    let det = g_uu * g_vv - g_uv * g_uv;
    if det <= 0.0 || !det.is_finite() {
        return Err(GridError::DegenerateMetric { det });
    }
    Ok(Metric2 {
        g_uu,
        g_uv,
        g_vv,
        sqrt_g: 1.0 / det.sqrt(),
    })
}

/// Contravariant push-forward `chi' = F chi F^T` with `F` the forward Jacobian.
pub fn push_tensor(chi: &SymTensor2, fwd: &Jacobian2) -> Result<SymTensor2> {
    let det = fwd.det();
    if det == 0.0 || !det.is_finite() {
        return Err(GridError::SingularJacobian { det, threshold: 0.0 });
    }
    let (zx, zy, ex, ey) = (fwd.a11, fwd.a12, fwd.a21, fwd.a22);
    Ok(SymTensor2::new(
        zx * zx * chi.xx + 2.0 * zx * zy * chi.xy + zy * zy * chi.yy,
        zx * ex * chi.xx + (zx * ey + ex * zy) * chi.xy + zy * ey * chi.yy,
        ex * ex * chi.xx + 2.0 * ex * ey * chi.xy + ey * ey * chi.yy,
    ))
}

/// Chain-rule composition of a covector: from `(u_zeta, u_eta)` and the
/// gradients of (zeta, eta) in (x, y), produce `(u_x, u_y)`.
pub fn compose_oneforms(du: (f64, f64), jac_new_from_old: &Jacobian2) -> (f64, f64) {
    let j = jac_new_from_old;
    (du.0 * j.a11 + du.1 * j.a21, du.0 * j.a12 + du.1 * j.a22)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn invert_diagonal() {
        let j = Jacobian2::new(2.0, 0.0, 0.0, 3.0);
        let inv = invert_jacobian(&j, 1.0).unwrap();
        assert_eq!(inv, Jacobian2::new(0.5, 0.0, 0.0, 1.0 / 3.0));
    }

    #[test]
    fn invert_rotation_is_transpose() {
        let phi = 0.7_f64;
        let j = Jacobian2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos());
        let inv = invert_jacobian(&j, 1.0).unwrap();
        let back = Jacobian2::new((-phi).cos(), -(-phi).sin(), (-phi).sin(), (-phi).cos());
        assert!(close(inv.a11, back.a11, 1e-15));
        assert!(close(inv.a12, back.a12, 1e-15));
        assert!(close(inv.a21, back.a21, 1e-15));
        assert!(close(inv.a22, back.a22, 1e-15));
    }

    #[test]
    fn invert_unit_shear() {
        // (zeta_x, zeta_y, eta_x, eta_y) = (1,1,0,1) -> (x_zeta, x_eta, y_zeta, y_eta) = (1,-1,0,1)
        let j = Jacobian2::new(1.0, 1.0, 0.0, 1.0);
        let inv = invert_jacobian(&j, 1.0).unwrap();
        assert_eq!(inv, Jacobian2::new(1.0, -1.0, 0.0, 1.0));
    }

    #[test]
    fn singular_jacobian_rejected() {
        let j = Jacobian2::new(1.0, 2.0, 0.5, 1.0);
        assert!(matches!(
            invert_jacobian(&j, 1.0),
            Err(GridError::SingularJacobian { .. })
        ));
    }

    #[test]
    fn volume_element_polar() {
        // x = r cos(phi), y = r sin(phi): jacobian rows (x_r, x_phi; y_r, y_phi)
        let (r, phi) = (2.5_f64, 1.1_f64);
        let j = Jacobian2::new(phi.cos(), -r * phi.sin(), phi.sin(), r * phi.cos());
        assert!(close(volume_element(&j, 1.0).unwrap(), r, 1e-15));
    }

    #[test]
    fn volume_element_identity_and_reciprocal() {
        assert_eq!(volume_element(&Jacobian2::identity(), 1.0).unwrap(), 1.0);
        let j = Jacobian2::new(1.3, 0.4, -0.2, 0.9);
        let inv = invert_jacobian(&j, 1.0).unwrap();
        let prod = volume_element(&j, 1.0).unwrap() * volume_element(&inv, 1.0).unwrap();
        assert!((prod - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_cartesian_and_diagonal() {
        let m = inverse_metric_from_gradients(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!((m.g_uu, m.g_uv, m.g_vv, m.sqrt_g), (1.0, 0.0, 1.0, 1.0));
        let m = inverse_metric_from_gradients(2.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!((m.g_uu, m.g_uv, m.g_vv), (4.0, 0.0, 9.0));
        assert!(close(m.sqrt_g, 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn metric_orthogonal_oneforms() {
        // dzeta = f grad(psi), deta = h rot(grad psi): g^{zeta eta} = 0 and
        // 1/sqrt(g) = (grad psi)^2 h f
        let (px, py, f, h) = (0.7, -1.9, 0.31, 0.05);
        let m = inverse_metric_from_gradients(f * px, f * py, -h * py, h * px).unwrap();
        assert!(m.g_uv.abs() < 1e-15);
        let grad_sq: f64 = px * px + py * py;
        assert!(close(1.0 / m.sqrt_g, grad_sq * h * f, 1e-14));
    }

    #[test]
    fn push_identity_scaling_and_rotation() {
        let chi = SymTensor2::identity();
        let scalemap = Jacobian2::new(2.0, 0.0, 0.0, 3.0);
        let pushed = push_tensor(&chi, &scalemap).unwrap();
        assert_eq!(pushed, SymTensor2::new(4.0, 0.0, 9.0));

        let phi = 0.4_f64;
        let rot = Jacobian2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos());
        let pushed = push_tensor(&chi, &rot).unwrap();
        assert!(close(pushed.xx, 1.0, 1e-15));
        assert!(pushed.xy.abs() < 1e-15);
        assert!(close(pushed.yy, 1.0, 1e-15));
    }

    #[test]
    fn push_composes() {
        // brute-force oracle: F2 (F1 chi F1^T) F2^T == (F2 F1) chi (F2 F1)^T
        let chi = SymTensor2::new(2.0, 0.3, 1.5);
        let j1 = Jacobian2::new(1.1, -0.3, 0.2, 0.8);
        let j2 = Jacobian2::new(0.4, 0.9, -1.2, 0.1);
        let seq = push_tensor(&push_tensor(&chi, &j1).unwrap(), &j2).unwrap();
        let combined = push_tensor(&chi, &j2.compose(&j1)).unwrap();
        assert!(close(seq.xx, combined.xx, 1e-13));
        assert!(close(seq.xy, combined.xy, 1e-13));
        assert!(close(seq.yy, combined.yy, 1e-13));
    }

    #[test]
    fn oneform_composition_examples() {
        let id = Jacobian2::identity();
        assert_eq!(compose_oneforms((1.0, 0.0), &id), (1.0, 0.0));
        // quarter rotation: zeta_x=0, zeta_y=1, eta_x=-1, eta_y=0
        let rot = Jacobian2::new(0.0, 1.0, -1.0, 0.0);
        assert_eq!(compose_oneforms((0.0, 1.0), &rot), (-1.0, 0.0));
    }

    proptest! {
        #[test]
        fn invert_twice_is_identity(a in -2.0..2.0f64, b in -2.0..2.0f64,
                                    c in -2.0..2.0f64, d in -2.0..2.0f64) {
            let j = Jacobian2::new(1.5 + a, b, c, 1.5 + d);
            prop_assume!(j.det().abs() > 1e-3);
            let back = invert_jacobian(&invert_jacobian(&j, 1.0).unwrap(), 1.0).unwrap();
            prop_assert!(close(back.a11, j.a11, 1e-12));
            prop_assert!(close(back.a12, j.a12, 1e-12));
            prop_assert!(close(back.a21, j.a21, 1e-12));
            prop_assert!(close(back.a22, j.a22, 1e-12));
        }

        #[test]
        fn volume_elements_reciprocal(a in -2.0..2.0f64, b in -2.0..2.0f64,
                                      c in -2.0..2.0f64, d in -2.0..2.0f64) {
            let j = Jacobian2::new(1.5 + a, b, c, 1.5 + d);
            prop_assume!(j.det().abs() > 1e-3);
            let inv = invert_jacobian(&j, 1.0).unwrap();
            let prod = volume_element(&j, 1.0).unwrap() * volume_element(&inv, 1.0).unwrap();
            prop_assert!((prod - 1.0).abs() < 1e-12);
        }

        #[test]
        fn push_preserves_positive_definiteness(
            lam in 1e-3..1e3f64, ratio in 1e-6..1.0f64, ang in 0.0..std::f64::consts::PI,
            a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64,
        ) {
            // spd tensor with eigenvalues lam and lam*ratio (condition <= 1e6)
            let (co, si) = (ang.cos(), ang.sin());
            let l2 = lam * ratio;
            let chi = SymTensor2::new(
                lam * co * co + l2 * si * si,
                (lam - l2) * co * si,
                lam * si * si + l2 * co * co,
            );
            prop_assume!(chi.is_positive_definite());
            let j = Jacobian2::new(1.5 + a, b, c, 1.5 + d);
            prop_assume!(j.det().abs() > 1e-2);
            let pushed = push_tensor(&chi, &j).unwrap();
            prop_assert!(pushed.is_positive_definite());
        }

        #[test]
        fn oneform_round_trip(ux in -3.0..3.0f64, uy in -3.0..3.0f64,
                              a in -2.0..2.0f64, b in -2.0..2.0f64,
                              c in -2.0..2.0f64, d in -2.0..2.0f64) {
            let j = Jacobian2::new(1.5 + a, b, c, 1.5 + d);
            prop_assume!(j.det().abs() > 1e-1);
            let inv = invert_jacobian(&j, 1.0).unwrap();
            let xy = compose_oneforms((ux, uy), &j);
            let back = compose_oneforms(xy, &inv);
            prop_assert!(close(back.0, ux, 1e-12));
            prop_assert!(close(back.1, uy, 1e-12));
        }
    }
}
