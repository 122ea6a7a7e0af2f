//! Embedded Dormand–Prince 5(4) Runge–Kutta integration of complex systems.
//!
//! The integrator stops exactly on every target time. Targets double as
//! segment boundaries: the right-hand side receives the current segment so
//! piecewise-constant drives never straddle a pulse edge.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step relative to `max(1, |t|)`.
    pub min_step_rel: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, min_step_rel: 1e-13, max_step: f64::INFINITY, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Right-hand side `dy = f(t, y)` evaluated inside the segment `[a, b]`.
pub(crate) trait Rhs {
    fn eval(&mut self, t: f64, seg: (f64, f64), y: &[Complex64], dy: &mut [Complex64]);
}

impl<F> Rhs for F
where
    F: FnMut(f64, (f64, f64), &[Complex64], &mut [Complex64]),
{
    fn eval(&mut self, t: f64, seg: (f64, f64), y: &[Complex64], dy: &mut [Complex64]) {
        self(t, seg, y, dy)
    }
}

/// Integrates `y` from `t0` through every time in `targets` (strictly
/// increasing, all `> t0`). `on_target(i, y)` fires on arrival at `targets[i]`;
/// `on_step(t, y)` fires after every accepted step.
pub(crate) fn integrate<R, S, T>(
    rhs: &mut R,
    y: &mut [Complex64],
    t0: f64,
    targets: &[f64],
    control: &StepControl,
    mut on_step: S,
    mut on_target: T,
) -> Result<IntegrationStats>
where
    R: Rhs,
    S: FnMut(f64, &[Complex64]),
    T: FnMut(usize, &[Complex64]),
{
    let n = y.len();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![ZERO; n]).collect();
    let mut tmp = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    let mut stats = IntegrationStats::default();

    let mut t = t0;
    let mut h_suggest: Option<f64> = None;

    for (ti, &target) in targets.iter().enumerate() {
        if !(target > t) {
            return Err(Error::InvalidGrid(format!("target {target} does not advance past {t}")));
        }
        let seg = (t, target);
        rhs.eval(t, seg, y, &mut k[0]);
        stats.rhs_evals += 1;
        let mut h = match h_suggest {
            Some(h) => h,
            None => initial_step(y, &k[0], target - t, control),
        };
        h = h.min(control.max_step);

        while t < target {
            let remaining = target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let h_min = control.min_step_rel * t.abs().max(1.0);
            if step < h_min && !last {
                return Err(Error::StepSizeUnderflow { time: t });
            }

            stage(&mut tmp, y, &k, step, &[(0, A21)]);
            rhs.eval(t + C2 * step, seg, &tmp, &mut k[1]);
            stage(&mut tmp, y, &k, step, &[(0, A31), (1, A32)]);
            rhs.eval(t + C3 * step, seg, &tmp, &mut k[2]);
            stage(&mut tmp, y, &k, step, &[(0, A41), (1, A42), (2, A43)]);
            rhs.eval(t + C4 * step, seg, &tmp, &mut k[3]);
            stage(&mut tmp, y, &k, step, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            rhs.eval(t + C5 * step, seg, &tmp, &mut k[4]);
            stage(&mut tmp, y, &k, step, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            rhs.eval(t + step, seg, &tmp, &mut k[5]);
            stage(&mut y_new, y, &k, step, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
            let t_new = if last { target } else { t + step };
            rhs.eval(t_new, seg, &y_new, &mut k[6]);
            stats.rhs_evals += 6;

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e =
                    step * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let scale = control.atol + control.rtol * y[i].norm_sqr().max(y_new[i].norm_sqr()).sqrt();
                err = err.max(e.norm_sqr() / (scale * scale));
            }
            let err = err.sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite("integrator state"));
            }

            if err <= 1.0 {
                y.copy_from_slice(&y_new);
                t = t_new;
                k.swap(0, 6);
                stats.accepted += 1;
                on_step(t, y);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a step truncated to hit the target says little about the
                // natural step size; keep the previous suggestion then
                if !last || step >= h {
                    h = (step * factor).min(control.max_step);
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < h_min {
                    return Err(Error::StepSizeUnderflow { time: t });
                }
            }
            if stats.accepted + stats.rejected > control.max_steps {
                return Err(Error::TooManySteps { steps: control.max_steps, time: t });
            }
        }
        h_suggest = Some(h);
        on_target(ti, y);
    }
    Ok(stats)
}

fn stage(out: &mut [Complex64], y: &[Complex64], k: &[Vec<Complex64>], h: f64, coeffs: &[(usize, f64)]) {
    out.copy_from_slice(y);
    for &(j, a) in coeffs {
        let ha = h * a;
        for (o, kv) in out.iter_mut().zip(&k[j]) {
            *o += kv * ha;
        }
    }
}

fn initial_step(y: &[Complex64], f0: &[Complex64], span: f64, control: &StepControl) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = control.atol + control.rtol * yi.norm();
        d0 = d0.max(yi.norm() / sc);
        d1 = d1.max(fi.norm() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).min(control.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_targets_exactly() {
        let mut rhs = |_t: f64, _s: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = -y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let targets = [0.5, 1.0, 2.0];
        let mut seen = Vec::new();
        integrate(
            &mut rhs,
            &mut y,
            0.0,
            &targets,
            &StepControl::with_tolerance(1e-10),
            |_, _| {},
            |i, y| seen.push((i, y[0].re)),
        )
        .unwrap();
        for (i, v) in seen {
            assert!((v - (-targets[i]).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_is_accurate() {
        // dy/dt = -i y, exact y = e^{-it}
        let mut rhs = |_t: f64, _s: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(0.0, -1.0) * y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        integrate(&mut rhs, &mut y, 0.0, &[10.0], &StepControl::with_tolerance(1e-11), |_, _| {}, |_, _| {}).unwrap();
        let exact = Complex64::new(0.0, -10.0).exp();
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn non_advancing_target_is_an_error() {
        let mut rhs = |_t: f64, _s: (f64, f64), _y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = ZERO;
        };
        let mut y = vec![ZERO];
        let r = integrate(&mut rhs, &mut y, 1.0, &[1.0], &StepControl::with_tolerance(1e-8), |_, _| {}, |_, _| {});
        assert!(matches!(r, Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn blow_up_reports_failure() {
        // finite-time singularity y' = y^2, y(0) = 1 at t = 1
        let mut rhs = |_t: f64, _s: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = y[0] * y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let r = integrate(&mut rhs, &mut y, 0.0, &[2.0], &StepControl::with_tolerance(1e-8), |_, _| {}, |_, _| {});
        assert!(r.is_err());
    }
}
