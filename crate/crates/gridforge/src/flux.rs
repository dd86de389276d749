//! Analytic flux functions with exact derivatives through second order.
//!
//! Every downstream formula is fed by a [`FluxJet`]: the value of psi and its
//! first and second partials at a point. The Solov'ev field reproduces the
//! Cerfon-Freidberg analytic Grad-Shafranov solution; its basis transcription
//! is validated through [`gs_residual`] and finite-difference jet checks, never
//! trusted directly.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};

/// Value and first/second partial derivatives of psi at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxJet {
    pub psi: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl FluxJet {
    /// `(grad psi)^2 = psi_x^2 + psi_y^2`.
    pub fn grad_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }

    /// Two-dimensional (planar) Laplacian `psi_xx + psi_yy`.
    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

/// Which Laplacian a ratio-style diagnostic uses.
///
/// The grid algorithms use the planar operator; the axisymmetric operator
/// `psi_xx + psi_x/x + psi_yy` reproduces the worked conformality ratios of
/// the example equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    Planar,
    Axisymmetric,
}

/// Solov'ev equilibrium: particular solution plus 12 homogeneous polynomials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolovevField {
    #[serde(rename = "A")]
    pub a: f64,
    pub c: [f64; 12],
    #[serde(rename = "R0")]
    pub r0: f64,
    /// Overall flux scale; evaluations are `amplitude * psibar(x/R0, y/R0)`.
    pub amplitude: f64,
    #[serde(default)]
    pub inverse_aspect_ratio: f64,
    #[serde(default)]
    pub elongation: f64,
    #[serde(default)]
    pub triangularity: f64,
}

impl SolovevField {
    /// The X-point equilibrium used throughout: A = 0 with the printed
    /// twelve coefficients, R0 = 547.891714877869.
    ///
    /// The amplitude R0 places the separatrix at psi = 0 and the magnetic
    /// axis at psi ~ -31.9, so the band psi in [-20, -1] is a closed annular
    /// region well inside the last closed flux surface.
    pub fn standard() -> Self {
        SolovevField {
            a: 0.0,
            c: [
                0.07350114445500399706,
                -0.08662417436317227513,
                -0.14639315434011026207,
                -0.07631237100536276213,
                0.09031790113794227394,
                -0.09157541239018724584,
                -0.003892282979837564482,
                0.04271891225076417603,
                0.22755456460027913117,
                -0.13047241360177695448,
                -0.03006974108476955225,
                0.004212671892103931173,
            ],
            r0: 547.891714877869,
            amplitude: 547.891714877869,
            inverse_aspect_ratio: 0.41071428571428575,
            elongation: 1.75,
            triangularity: 0.47,
        }
    }
}

/// Analytic flux function selection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticField {
    /// `psi = scale * ((x-cx)^2 + (y-cy)^2) / 2`; planar Laplacian is `2 scale` exactly.
    Annulus { center: [f64; 2], scale: f64 },
    /// `psi = x^4` (a Grad-Shafranov equilibrium depending on R only).
    PowerFour,
    /// `psi = x^2 y^2` (Grad-Shafranov equilibrium with nontrivial conformality ratio).
    ProductSquare,
    /// Harmonic flux `psi = ln r` about a center; `lap psi = 0`, so the
    /// orthogonal grid built on it is already conformal.
    LogRadius { center: [f64; 2] },
    Solovev(SolovevField),
}

impl AnalyticField {
    pub fn annulus() -> Self {
        AnalyticField::Annulus { center: [0.0, 0.0], scale: 1.0 }
    }

    pub fn solovev() -> Self {
        AnalyticField::Solovev(SolovevField::standard())
    }

    /// Select a built-in field by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "annulus" => Ok(Self::annulus()),
            "solovev" => Ok(Self::solovev()),
            "power4" | "power_four" => Ok(AnalyticField::PowerFour),
            "product_square" => Ok(AnalyticField::ProductSquare),
            "log_radius" => Ok(AnalyticField::LogRadius { center: [0.0, 0.0] }),
            other => Err(GridError::Config(format!("unknown flux field '{other}'"))),
        }
    }

    /// Starting point for the interior critical-point (axis) search.
    pub fn axis_seed(&self) -> (f64, f64) {
        match self {
            AnalyticField::Annulus { center, .. } | AnalyticField::LogRadius { center } => {
                (center[0], center[1])
            }
            AnalyticField::Solovev(s) => (1.1 * s.r0, 0.0),
            AnalyticField::PowerFour | AnalyticField::ProductSquare => (1.0, 1.0),
        }
    }

    /// A representative length scale of the field's domain.
    pub fn length_scale(&self) -> f64 {
        match self {
            AnalyticField::Solovev(s) => s.r0,
            _ => 1.0,
        }
    }

    /// Evaluate psi and all first and second partials at `(x, y)`.
    pub fn eval_jet(&self, x: f64, y: f64) -> Result<FluxJet> {
        match self {
            AnalyticField::Annulus { center, scale } => {
                let (rx, ry) = (x - center[0], y - center[1]);
                Ok(FluxJet {
                    psi: 0.5 * scale * (rx * rx + ry * ry),
                    dx: scale * rx,
                    dy: scale * ry,
                    dxx: *scale,
                    dxy: 0.0,
                    dyy: *scale,
                })
            }
            AnalyticField::PowerFour => Ok(FluxJet {
                psi: x.powi(4),
                dx: 4.0 * x.powi(3),
                dy: 0.0,
                dxx: 12.0 * x * x,
                dxy: 0.0,
                dyy: 0.0,
            }),
            AnalyticField::ProductSquare => Ok(FluxJet {
                psi: x * x * y * y,
                dx: 2.0 * x * y * y,
                dy: 2.0 * x * x * y,
                dxx: 2.0 * y * y,
                dxy: 4.0 * x * y,
                dyy: 2.0 * x * x,
            }),
            AnalyticField::LogRadius { center } => {
                let (rx, ry) = (x - center[0], y - center[1]);
                let r2 = rx * rx + ry * ry;
                if r2 <= 0.0 {
                    return Err(GridError::Domain {
                        x,
                        y,
                        reason: "log-radius flux undefined at its center".into(),
                    });
                }
                Ok(FluxJet {
                    psi: 0.5 * r2.ln(),
                    dx: rx / r2,
                    dy: ry / r2,
                    dxx: (ry * ry - rx * rx) / (r2 * r2),
                    dxy: -2.0 * rx * ry / (r2 * r2),
                    dyy: (rx * rx - ry * ry) / (r2 * r2),
                })
            }
            AnalyticField::Solovev(s) => solovev_jet(s, x, y),
        }
    }
}

/// Jet of one scalar basis term in normalized coordinates.
#[derive(Clone, Copy)]
struct Term {
    f: f64,
    fx: f64,
    fy: f64,
    fxx: f64,
    fxy: f64,
    fyy: f64,
}

/// The twelve Cerfon-Freidberg homogeneous solutions of `Delta* psi = 0`,
/// plus the particular solution, evaluated with exact derivatives.
fn solovev_terms(x: f64, y: f64, a: f64) -> [Term; 13] {
    let l = x.ln();
    let (x2, x3, x4, x5, x6) = (x * x, x * x * x, x.powi(4), x.powi(5), x.powi(6));
    let (y2, y3, y4, y5, y6) = (y * y, y * y * y, y.powi(4), y.powi(5), y.powi(6));
    [
        // particular: (1-A) x^4/8 + A x^2 ln(x)/2
        Term {
            f: (1.0 - a) * x4 / 8.0 + a * x2 * l / 2.0,
            fx: (1.0 - a) * x3 / 2.0 + a * (x * l + x / 2.0),
            fy: 0.0,
            fxx: 1.5 * (1.0 - a) * x2 + a * (l + 1.5),
            fxy: 0.0,
            fyy: 0.0,
        },
        Term { f: 1.0, fx: 0.0, fy: 0.0, fxx: 0.0, fxy: 0.0, fyy: 0.0 },
        Term { f: x2, fx: 2.0 * x, fy: 0.0, fxx: 2.0, fxy: 0.0, fyy: 0.0 },
        Term {
            f: y2 - x2 * l,
            fx: -2.0 * x * l - x,
            fy: 2.0 * y,
            fxx: -2.0 * l - 3.0,
            fxy: 0.0,
            fyy: 2.0,
        },
        Term {
            f: x4 - 4.0 * x2 * y2,
            fx: 4.0 * x3 - 8.0 * x * y2,
            fy: -8.0 * x2 * y,
            fxx: 12.0 * x2 - 8.0 * y2,
            fxy: -16.0 * x * y,
            fyy: -8.0 * x2,
        },
        Term {
            f: 2.0 * y4 - 9.0 * y2 * x2 + (3.0 * x4 - 12.0 * x2 * y2) * l,
            fx: 3.0 * x3 - 30.0 * x * y2 + (12.0 * x3 - 24.0 * x * y2) * l,
            fy: 8.0 * y3 - 18.0 * x2 * y - 24.0 * x2 * y * l,
            fxx: 21.0 * x2 - 54.0 * y2 + (36.0 * x2 - 24.0 * y2) * l,
            fxy: -60.0 * x * y - 48.0 * x * y * l,
            fyy: 24.0 * y2 - 18.0 * x2 - 24.0 * x2 * l,
        },
        Term {
            f: x6 - 12.0 * x4 * y2 + 8.0 * x2 * y4,
            fx: 6.0 * x5 - 48.0 * x3 * y2 + 16.0 * x * y4,
            fy: -24.0 * x4 * y + 32.0 * x2 * y3,
            fxx: 30.0 * x4 - 144.0 * x2 * y2 + 16.0 * y4,
            fxy: -96.0 * x3 * y + 64.0 * x * y3,
            fyy: -24.0 * x4 + 96.0 * x2 * y2,
        },
        Term {
            f: 8.0 * y6 - 140.0 * y4 * x2 + 75.0 * y2 * x4
                - (15.0 * x6 - 180.0 * x4 * y2 + 120.0 * x2 * y4) * l,
            fx: -15.0 * x5 + 480.0 * x3 * y2 - 400.0 * x * y4
                - (90.0 * x5 - 720.0 * x3 * y2 + 240.0 * x * y4) * l,
            fy: 48.0 * y5 - 560.0 * x2 * y3 + 150.0 * x4 * y
                + (360.0 * x4 * y - 480.0 * x2 * y3) * l,
            fxx: -165.0 * x4 + 2160.0 * x2 * y2 - 640.0 * y4
                - (450.0 * x4 - 2160.0 * x2 * y2 + 240.0 * y4) * l,
            fxy: 960.0 * x3 * y - 1600.0 * x * y3 + (1440.0 * x3 * y - 960.0 * x * y3) * l,
            fyy: 240.0 * y4 - 1680.0 * x2 * y2 + 150.0 * x4
                + (360.0 * x4 - 1440.0 * x2 * y2) * l,
        },
        Term { f: y, fx: 0.0, fy: 1.0, fxx: 0.0, fxy: 0.0, fyy: 0.0 },
        Term {
            f: y * x2,
            fx: 2.0 * x * y,
            fy: x2,
            fxx: 2.0 * y,
            fxy: 2.0 * x,
            fyy: 0.0,
        },
        Term {
            f: y3 - 3.0 * y * x2 * l,
            fx: -6.0 * x * y * l - 3.0 * x * y,
            fy: 3.0 * y2 - 3.0 * x2 * l,
            fxx: -6.0 * y * l - 9.0 * y,
            fxy: -6.0 * x * l - 3.0 * x,
            fyy: 6.0 * y,
        },
        Term {
            f: 3.0 * y * x4 - 4.0 * y3 * x2,
            fx: 12.0 * x3 * y - 8.0 * x * y3,
            fy: 3.0 * x4 - 12.0 * x2 * y2,
            fxx: 36.0 * x2 * y - 8.0 * y3,
            fxy: 12.0 * x3 - 24.0 * x * y2,
            fyy: -24.0 * x2 * y,
        },
        Term {
            f: 8.0 * y5 - 45.0 * y * x4 - (80.0 * y3 * x2 - 60.0 * y * x4) * l,
            fx: -120.0 * x3 * y - 80.0 * x * y3 - (160.0 * x * y3 - 240.0 * x3 * y) * l,
            fy: 40.0 * y4 - 45.0 * x4 - (240.0 * x2 * y2 - 60.0 * x4) * l,
            fxx: -120.0 * x2 * y - 240.0 * y3 - (160.0 * y3 - 720.0 * x2 * y) * l,
            fxy: -120.0 * x3 - 240.0 * x * y2 - (480.0 * x * y2 - 240.0 * x3) * l,
            fyy: 160.0 * y3 - 480.0 * x2 * y * l,
        },
    ]
}

fn solovev_jet(s: &SolovevField, x: f64, y: f64) -> Result<FluxJet> {
    let xn = x / s.r0;
    let yn = y / s.r0;
    if xn <= 0.0 {
        return Err(GridError::Domain {
            x,
            y,
            reason: "Solov'ev field requires x > 0".into(),
        });
    }
    let terms = solovev_terms(xn, yn, s.a);
    let mut acc = Term { f: 0.0, fx: 0.0, fy: 0.0, fxx: 0.0, fxy: 0.0, fyy: 0.0 };
    let weights = std::iter::once(1.0).chain(s.c.iter().copied());
    for (w, t) in weights.zip(terms.iter()) {
        acc.f += w * t.f;
        acc.fx += w * t.fx;
        acc.fy += w * t.fy;
        acc.fxx += w * t.fxx;
        acc.fxy += w * t.fxy;
        acc.fyy += w * t.fyy;
    }
    let a1 = s.amplitude / s.r0;
    let a2 = a1 / s.r0;
    Ok(FluxJet {
        psi: s.amplitude * acc.f,
        dx: a1 * acc.fx,
        dy: a1 * acc.fy,
        dxx: a2 * acc.fxx,
        dxy: a2 * acc.fxy,
        dyy: a2 * acc.fyy,
    })
}

/// Ratio `lap(psi) / (grad psi)^2`; a conformal flux-aligned coordinate
/// system exists iff this is a function of psi alone.
pub fn conformal_condition(
    field: &AnalyticField,
    x: f64,
    y: f64,
    kind: LaplacianKind,
) -> Result<f64> {
    let jet = field.eval_jet(x, y)?;
    let grad_sq = jet.grad_sq();
    if grad_sq <= f64::MIN_POSITIVE {
        return Err(GridError::SingularGradient { x, y });
    }
    let lap = match kind {
        LaplacianKind::Planar => jet.laplacian(),
        LaplacianKind::Axisymmetric => jet.dxx + jet.dx / x + jet.dyy,
    };
    Ok(lap / grad_sq)
}

/// Relative residual of `Delta* psi` against a least-squares fit of
/// `alpha x^2 + beta` over the sample points.
///
/// For Solov'ev profiles the Grad-Shafranov right-hand side is linear in x^2
/// plus a constant, so a correct field transcription drives this to zero.
pub fn gs_residual(field: &AnalyticField, points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(GridError::Config(
            "gs_residual requires at least 3 sample points".into(),
        ));
    }
    let mut t = Vec::with_capacity(points.len());
    let mut basis = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if x <= 0.0 {
            return Err(GridError::Domain {
                x,
                y,
                reason: "Grad-Shafranov operator requires x > 0".into(),
            });
        }
        let jet = field.eval_jet(x, y)?;
        t.push(jet.dxx - jet.dx / x + jet.dyy);
        basis.push(x * x);
    }
    // normal equations for t ~ alpha*x^2 + beta
    let n = points.len() as f64;
    let (mut sb, mut sbb, mut st, mut sbt) = (0.0, 0.0, 0.0, 0.0);
    for (&b, &ti) in basis.iter().zip(&t) {
        sb += b;
        sbb += b * b;
        st += ti;
        sbt += b * ti;
    }
    let det = sbb * n - sb * sb;
    if det.abs() <= f64::MIN_POSITIVE {
        return Err(GridError::Config(
            "gs_residual sample points are degenerate (constant x^2)".into(),
        ));
    }
    let alpha = (sbt * n - sb * st) / det;
    let beta = (sbb * st - sb * sbt) / det;
    let mut res_sq = 0.0;
    let mut t_sq = 0.0;
    for (&b, &ti) in basis.iter().zip(&t) {
        let r = ti - alpha * b - beta;
        res_sq += r * r;
        t_sq += ti * ti;
    }
    if t_sq <= f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok((res_sq / t_sq).sqrt())
}

/// Newton search for an interior critical point of psi (the magnetic axis).
pub fn find_axis(field: &AnalyticField, seed: (f64, f64)) -> Result<(f64, f64)> {
    let scale = field.length_scale();
    let (mut x, mut y) = seed;
    for _ in 0..100 {
        let jet = field.eval_jet(x, y)?;
        let det = jet.dxx * jet.dyy - jet.dxy * jet.dxy;
        if det.abs() <= f64::MIN_POSITIVE {
            return Err(GridError::SingularGradient { x, y });
        }
        let dx = (-jet.dx * jet.dyy + jet.dy * jet.dxy) / det;
        let dy = (-jet.dxx * jet.dy + jet.dxy * jet.dx) / det;
        x += dx;
        y += dy;
        if dx.hypot(dy) < 1e-14 * scale {
            return Ok((x, y));
        }
    }
    Err(GridError::NonConvergence { residual: f64::NAN, iterations: 100 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 4th-order central finite differences of psi values, the independent
    /// oracle for every analytic jet component.
    pub(crate) fn fd_jet(field: &AnalyticField, x: f64, y: f64, h: f64) -> FluxJet {
        let p = |dx: f64, dy: f64| field.eval_jet(x + dx, y + dy).unwrap().psi;
        let d1 = |f: &dyn Fn(f64) -> f64| {
            (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
        };
        let d2 = |f: &dyn Fn(f64) -> f64| {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
                / (12.0 * h * h)
        };
        let fx = |t: f64| p(t, 0.0);
        let fy = |t: f64| p(0.0, t);
        // d2/dxdy via 4th-order cross stencil of the x-derivative
        let dx_at = |dy: f64| {
            let g = |t: f64| p(t, dy);
            d1(&g)
        };
        let dxy = (8.0 * (dx_at(h) - dx_at(-h)) - (dx_at(2.0 * h) - dx_at(-2.0 * h))) / (12.0 * h);
        FluxJet {
            psi: p(0.0, 0.0),
            dx: d1(&fx),
            dy: d1(&fy),
            dxx: d2(&fx),
            dxy,
            dyy: d2(&fy),
        }
    }

    fn assert_jet_close(a: &FluxJet, b: &FluxJet, tol: f64, scale: f64) {
        for (u, v) in [
            (a.psi, b.psi),
            (a.dx, b.dx),
            (a.dy, b.dy),
            (a.dxx, b.dxx),
            (a.dxy, b.dxy),
            (a.dyy, b.dyy),
        ] {
            assert!(
                (u - v).abs() <= tol * (scale + u.abs().max(v.abs())),
                "jet component mismatch: {u} vs {v}"
            );
        }
    }

    #[test]
    fn annulus_jet_at_unit_point() {
        let f = AnalyticField::annulus();
        let jet = f.eval_jet(1.0, 0.0).unwrap();
        assert_eq!(
            jet,
            FluxJet { psi: 0.5, dx: 1.0, dy: 0.0, dxx: 1.0, dxy: 0.0, dyy: 1.0 }
        );
    }

    #[test]
    fn power_four_depends_on_x_only() {
        let jet = AnalyticField::PowerFour.eval_jet(2.0, 5.0).unwrap();
        assert_eq!(jet.psi, 16.0);
        assert_eq!(jet.dx, 32.0);
        assert_eq!(jet.dy, 0.0);
    }

    #[test]
    fn solovev_rejects_nonpositive_x() {
        let f = AnalyticField::solovev();
        assert!(matches!(f.eval_jet(0.0, 1.0), Err(GridError::Domain { .. })));
        assert!(matches!(f.eval_jet(-3.0, 1.0), Err(GridError::Domain { .. })));
    }

    #[test]
    fn jets_match_finite_differences_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cases: [(AnalyticField, f64, f64, f64, f64, f64); 5] = [
            (AnalyticField::annulus(), 0.5, 2.5, -2.0, 2.0, 1.0),
            (AnalyticField::PowerFour, 0.5, 3.0, -2.0, 2.0, 1.0),
            (AnalyticField::ProductSquare, 0.5, 3.0, 0.3, 2.0, 1.0),
            (AnalyticField::LogRadius { center: [0.0, 0.0] }, 0.7, 2.5, -1.0, 1.0, 1.0),
            (AnalyticField::solovev(), 450.0, 700.0, -250.0, 250.0, 548.0),
        ];
        for (field, x_lo, x_hi, y_lo, y_hi, scale) in &cases {
            for _ in 0..60 {
                let x = rng.gen_range(*x_lo..*x_hi);
                let y = rng.gen_range(*y_lo..*y_hi);
                let jet = field.eval_jet(x, y).unwrap();
                let fd = fd_jet(field, x, y, 1e-4 * scale);
                let psi_scale = jet.psi.abs().max(1.0);
                assert_jet_close(&jet, &fd, 1e-6, psi_scale / scale);
            }
        }
    }

    #[test]
    fn conformal_condition_power_four_is_inverse_psi() {
        for &(x, y) in &[(1.5f64, 0.3f64), (2.0, 5.0), (0.7, -1.0)] {
            let psi = x.powi(4);
            let ratio =
                conformal_condition(&AnalyticField::PowerFour, x, y, LaplacianKind::Axisymmetric)
                    .unwrap();
            assert!((ratio - 1.0 / psi).abs() < 1e-12 / psi);
            // planar operator gives 3/(4 psi) instead
            let planar =
                conformal_condition(&AnalyticField::PowerFour, x, y, LaplacianKind::Planar)
                    .unwrap();
            assert!((planar - 0.75 / psi).abs() < 1e-12 / psi);
        }
    }

    #[test]
    fn conformal_condition_product_square_formula() {
        for &(x, y) in &[(1.2, 0.8), (3.0, -1.5), (0.4, 2.0)] {
            let psi = x * x * y * y;
            let expected = (1.0 + 1.0 / (1.0 + x * x / (y * y))) / (2.0 * psi);
            let ratio = conformal_condition(
                &AnalyticField::ProductSquare,
                x,
                y,
                LaplacianKind::Axisymmetric,
            )
            .unwrap();
            assert!((ratio - expected).abs() < 1e-12 * expected.abs());
        }
    }

    #[test]
    fn conformal_condition_annulus_constant_on_contours() {
        let f = AnalyticField::annulus();
        let r = 1.7;
        let base = conformal_condition(&f, r, 0.0, LaplacianKind::Planar).unwrap();
        assert!((base - 1.0 / (0.5 * r * r)).abs() < 1e-14);
        let mut spread: f64 = 0.0;
        for k in 0..64 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let v =
                conformal_condition(&f, r * ang.cos(), r * ang.sin(), LaplacianKind::Planar)
                    .unwrap();
            spread = spread.max((v - base).abs());
        }
        assert!(spread < 1e-12, "spread along contour: {spread}");
    }

    #[test]
    fn conformal_condition_rejects_singular_gradient() {
        let f = AnalyticField::annulus();
        assert!(matches!(
            conformal_condition(&f, 0.0, 0.0, LaplacianKind::Planar),
            Err(GridError::SingularGradient { .. })
        ));
    }

    fn sample_ring(n: usize, r_lo: f64, r_hi: f64, cx: f64, cy: f64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        (0..n)
            .map(|_| {
                let r = rng.gen_range(r_lo..r_hi);
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()
    }

    #[test]
    fn gs_residual_power_four_exact() {
        // Delta* x^4 = 8 x^2, fit by alpha x^2 exactly
        let pts = sample_ring(40, 0.5, 2.0, 3.0, 0.0);
        let r = gs_residual(&AnalyticField::PowerFour, &pts).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn gs_residual_product_square_exact() {
        // Delta* (x^2 y^2) = 2 x^2 by hand, so the alpha x^2 + beta fit is exact
        let pts = sample_ring(40, 0.5, 2.0, 3.0, 0.5);
        let r = gs_residual(&AnalyticField::ProductSquare, &pts).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn gs_residual_negative_control() {
        // a shifted annulus gives Delta* = 1 + cx/x, not of the fitted form
        let f = AnalyticField::Annulus { center: [2.0, 0.0], scale: 1.0 };
        let pts = sample_ring(40, 0.5, 1.4, 2.0, 0.0);
        let r = gs_residual(&f, &pts).unwrap();
        assert!(r > 1e-3, "shifted annulus should not fit: residual {r}");
    }

    #[test]
    fn gs_residual_solovev_below_1e8() {
        let f = AnalyticField::solovev();
        let pts = sample_ring(200, 20.0, 160.0, 588.0, 16.0);
        let r = gs_residual(&f, &pts).unwrap();
        assert!(r <= 1e-8, "Solov'ev transcription residual {r}");
    }

    #[test]
    fn gs_residual_requires_three_points() {
        let f = AnalyticField::PowerFour;
        assert!(gs_residual(&f, &[(1.0, 0.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn axis_of_standard_solovev() {
        let f = AnalyticField::solovev();
        let (ax, ay) = find_axis(&f, f.axis_seed()).unwrap();
        let jet = f.eval_jet(ax, ay).unwrap();
        assert!(jet.grad_sq().sqrt() < 1e-9);
        // psi at the axis is about -31.86 with the standard amplitude
        assert!((jet.psi + 31.8596).abs() < 0.01, "psi_axis = {}", jet.psi);
        assert!((ax - 588.18).abs() < 0.5 && (ay - 16.0).abs() < 0.5);
    }

    #[test]
    fn field_spec_json_round_trip() {
        let f = AnalyticField::solovev();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"type\":\"solovev\""));
        let back: AnalyticField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
