//! Adaptive Dormand-Prince 5(4) integration, the geometric poloidal angle,
//! and contour-point root finding.
//!
//! Streamline right-hand sides are fallible closures: a stage evaluation may
//! report a vanishing reparameterization denominator or a domain violation.
//! Such failures first shrink the step; they only propagate once the step
//! size underflows.

use crate::error::{GridError, Result};
use crate::flux::AnalyticField;

/// Tolerances and limits for the embedded 5(4) pair with PI step control.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; if zero, a fraction of the integration span is used.
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { rtol: 1e-11, atol: 1e-13, max_steps: 200_000, initial_step: 0.0 }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// b5 - b4, applied to the stages for the local error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1`.
pub fn integrate<const N: usize, F>(
    rhs: &F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut stepper = Stepper::new(rhs, t0, y0, cfg)?;
    stepper.advance_to(t1)?;
    Ok(stepper.y)
}

/// Integrate through an increasing or decreasing sequence of parameter
/// values, invoking `sink(index, state)` at each target.
pub fn integrate_dense<const N: usize, F, S>(
    rhs: &F,
    t0: f64,
    targets: &[f64],
    y0: [f64; N],
    cfg: &IntegratorConfig,
    mut sink: S,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    S: FnMut(usize, &[f64; N]),
{
    let mut stepper = Stepper::new(rhs, t0, y0, cfg)?;
    for (k, &t) in targets.iter().enumerate() {
        stepper.advance_to(t)?;
        sink(k, &stepper.y);
    }
    Ok(stepper.y)
}

struct Stepper<'a, const N: usize, F> {
    rhs: &'a F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    err_old: f64,
    cfg: IntegratorConfig,
    steps: usize,
}

impl<'a, const N: usize, F> Stepper<'a, N, F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn new(rhs: &'a F, t0: f64, y0: [f64; N], cfg: &IntegratorConfig) -> Result<Self> {
        let k1 = rhs(t0, &y0)?;
        Ok(Stepper { rhs, t: t0, y: y0, k1, h: 0.0, err_old: 1e-4, cfg: *cfg, steps: 0 })
    }

    fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            let h0 = if self.cfg.initial_step > 0.0 {
                self.cfg.initial_step
            } else {
                span.abs() / 100.0
            };
            self.h = dir * h0.min(span.abs());
        }
        let h_min = span.abs() * 1e-14;
        let mut rhs_failures = 0usize;
        while (t_end - self.t) * dir > 0.0 {
            if self.steps >= self.cfg.max_steps {
                return Err(GridError::StepFailure {
                    t: self.t,
                    reason: format!("exceeded {} steps", self.cfg.max_steps),
                });
            }
            self.steps += 1;
            let mut h = self.h;
            if (self.t + h - t_end) * dir > 0.0 {
                h = t_end - self.t;
            }
            match self.try_step(h) {
                Ok(StepOutcome::Accept { y_new, k_last, err }) => {
                    self.t += h;
                    self.y = y_new;
                    self.k1 = k_last;
                    rhs_failures = 0;
                    // PI controller (Hairer): beta = 0.04, alpha = 0.2 - 0.75 beta
                    let fac = 0.9
                        * err.max(1e-30).powf(-0.17)
                        * self.err_old.max(1e-30).powf(0.04);
                    self.h = h * fac.clamp(0.2, 10.0);
                    self.err_old = err.max(1e-30);
                }
                Ok(StepOutcome::Reject { err }) => {
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    self.h = h * fac;
                    if self.h.abs() < h_min {
                        return Err(GridError::StepFailure {
                            t: self.t,
                            reason: "step size underflow under error control".into(),
                        });
                    }
                }
                Err(e) => {
                    // RHS failed inside a trial stage; shrink and retry, the
                    // failure is real only if it persists at tiny steps.
                    rhs_failures += 1;
                    self.h = h * 0.25;
                    if self.h.abs() < h_min || rhs_failures > 40 {
                        return Err(e);
                    }
                }
            }
        }
        Ok(())
    }

    fn try_step(&self, h: f64) -> Result<StepOutcome<N>> {
        let mut k = [[0.0; N]; 7];
        k[0] = self.k1;
        for stage in 1..7 {
            let mut y_stage = self.y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for n in 0..N {
                        y_stage[n] += h * a * kj[n];
                    }
                }
            }
            k[stage] = (self.rhs)(self.t + C[stage] * h, &y_stage)?;
        }
        // 5th-order solution is the stage-7 state (FSAL)
        let mut y_new = self.y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                for n in 0..N {
                    y_new[n] += h * a * kj[n];
                }
            }
        }
        let mut err_sq = 0.0;
        for n in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[n];
            }
            e *= h;
            let sc = self.cfg.atol + self.cfg.rtol * self.y[n].abs().max(y_new[n].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Ok(StepOutcome::Reject { err: 1e4 });
        }
        if err <= 1.0 {
            Ok(StepOutcome::Accept { y_new, k_last: k[6], err })
        } else {
            Ok(StepOutcome::Reject { err })
        }
    }
}

enum StepOutcome<const N: usize> {
    Accept { y_new: [f64; N], k_last: [f64; N], err: f64 },
    Reject { err: f64 },
}

/// Center for the geometric poloidal angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaFrame {
    pub x0: f64,
    pub y0: f64,
}

impl ThetaFrame {
    pub fn new(x0: f64, y0: f64) -> Self {
        ThetaFrame { x0, y0 }
    }

    /// Branch-correct poloidal angle in (-pi, pi]; positive arccos branch for
    /// y >= y0, negative below.
    pub fn theta(&self, x: f64, y: f64) -> Result<f64> {
        let (rx, ry) = (x - self.x0, y - self.y0);
        let rho = rx.hypot(ry);
        if rho <= f64::MIN_POSITIVE {
            return Err(GridError::CenterPoint { x0: self.x0, y0: self.y0 });
        }
        let a = (rx / rho).clamp(-1.0, 1.0).acos();
        Ok(if ry >= 0.0 { a } else { -a })
    }

    /// Components of the 1-form d theta.
    pub fn dtheta(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (rx, ry) = (x - self.x0, y - self.y0);
        let rho_sq = rx * rx + ry * ry;
        if rho_sq <= f64::MIN_POSITIVE {
            return Err(GridError::CenterPoint { x0: self.x0, y0: self.y0 });
        }
        Ok((-ry / rho_sq, rx / rho_sq))
    }
}

/// Integrate a reparameterized streamline `d(x,y)/df = v(x,y)` from
/// `param_from` to `param_to`.
pub fn integrate_streamline<V>(
    vfield: &V,
    start: (f64, f64),
    param_from: f64,
    param_to: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)>
where
    V: Fn(f64, (f64, f64)) -> Result<(f64, f64)>,
{
    let rhs = |t: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let v = vfield(t, (y[0], y[1]))?;
        Ok([v.0, v.1])
    };
    let y = integrate(&rhs, param_from, param_to, [start.0, start.1], cfg)?;
    Ok((y[0], y[1]))
}

/// As [`integrate_streamline`] with dense output at each of `targets`.
pub fn integrate_streamline_dense<V, S>(
    vfield: &V,
    start: (f64, f64),
    param_from: f64,
    targets: &[f64],
    cfg: &IntegratorConfig,
    mut sink: S,
) -> Result<(f64, f64)>
where
    V: Fn(f64, (f64, f64)) -> Result<(f64, f64)>,
    S: FnMut(usize, (f64, f64)),
{
    let rhs = |t: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let v = vfield(t, (y[0], y[1]))?;
        Ok([v.0, v.1])
    };
    let y = integrate_dense(&rhs, param_from, targets, [start.0, start.1], cfg, |k, s| {
        sink(k, (s[0], s[1]))
    })?;
    Ok((y[0], y[1]))
}

/// Integrate a streamline carrying one auxiliary scalar in the same
/// error-controlled step: `d(x,y)/df = v`, `d aux/df = aux_rhs`.
pub fn integrate_with_aux<V, G>(
    vfield: &V,
    aux_rhs: &G,
    start: (f64, f64),
    aux_start: f64,
    param_from: f64,
    param_to: f64,
    cfg: &IntegratorConfig,
) -> Result<((f64, f64), f64)>
where
    V: Fn(f64, (f64, f64)) -> Result<(f64, f64)>,
    G: Fn(f64, (f64, f64), f64) -> Result<f64>,
{
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let v = vfield(t, (y[0], y[1]))?;
        let a = aux_rhs(t, (y[0], y[1]), y[2])?;
        Ok([v.0, v.1, a])
    };
    let y = integrate(&rhs, param_from, param_to, [start.0, start.1, aux_start], cfg)?;
    Ok(((y[0], y[1]), y[2]))
}

/// Find the point with `psi = psi_target` on the ray `origin + t * dir`,
/// `t in (0, t_max]`, by bracketing, bisection and a Newton polish.
///
/// `psi_scale` sets the acceptance tolerance `1e-12 * psi_scale`.
pub fn find_flux_point(
    field: &AnalyticField,
    origin: (f64, f64),
    dir: (f64, f64),
    psi_target: f64,
    t_max: f64,
    psi_scale: f64,
) -> Result<(f64, f64)> {
    let norm = dir.0.hypot(dir.1);
    if norm <= 0.0 || t_max <= 0.0 {
        return Err(GridError::Config("find_flux_point requires a direction and t_max > 0".into()));
    }
    let d = (dir.0 / norm, dir.1 / norm);
    let eval = |t: f64| -> Result<f64> {
        let jet = field.eval_jet(origin.0 + t * d.0, origin.1 + t * d.1)?;
        Ok(jet.psi - psi_target)
    };
    // bracket by linear march; the first sample sits just off the origin
    const SAMPLES: usize = 256;
    let mut t_lo = t_max * 1e-9;
    let mut f_lo = eval(t_lo)?;
    let mut bracket = None;
    for k in 1..=SAMPLES {
        let t = t_max * k as f64 / SAMPLES as f64;
        let f = eval(t)?;
        if f_lo == 0.0 {
            bracket = Some((t_lo, t_lo));
            break;
        }
        if f_lo.signum() != f.signum() {
            bracket = Some((t_lo, t));
            break;
        }
        t_lo = t;
        f_lo = f;
    }
    let (mut lo, mut hi) = bracket.ok_or(GridError::BracketFailure { target: psi_target })?;
    let mut f_lo = eval(lo)?;
    for _ in 0..80 {
        if hi - lo <= f64::EPSILON * t_max {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if f_lo.signum() == f_mid.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish using the exact gradient along the ray
    let mut t = 0.5 * (lo + hi);
    let tol = 1e-12 * psi_scale;
    for _ in 0..8 {
        let (x, y) = (origin.0 + t * d.0, origin.1 + t * d.1);
        let jet = field.eval_jet(x, y)?;
        let f = jet.psi - psi_target;
        if f.abs() <= tol {
            return Ok((x, y));
        }
        let df = jet.dx * d.0 + jet.dy * d.1;
        if df.abs() <= f64::MIN_POSITIVE {
            break;
        }
        t -= f / df;
    }
    let (x, y) = (origin.0 + t * d.0, origin.1 + t * d.1);
    let jet = field.eval_jet(x, y)?;
    if (jet.psi - psi_target).abs() <= tol {
        Ok((x, y))
    } else {
        Err(GridError::BracketFailure { target: psi_target })
    }
}
