//! Optimised error versus cooperativity.

use serde::Serialize;

use super::{g_for_cooperativity, simulate_cycle, CycleOptions, Detunings, DiamondParams};
use crate::error::{Error, Result};
use crate::optimize::{minimize, Dimension, OptimizerSettings};
use crate::par::{map_indexed, Execution};

#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub kappa: f64,
    /// `kappa_f / kappa`
    pub fiber_fraction: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub optimizer: OptimizerSettings,
    pub cycle: CycleOptions,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            kappa: 2000.0,
            fiber_fraction: 0.5,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 1.0,
            optimizer: OptimizerSettings::default(),
            cycle: CycleOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub cooperativity: f64,
    pub error: f64,
    pub fidelity: f64,
    pub params: DiamondParams,
    pub evaluations: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
}

/// Search box over `(Ω1, Ωe, Ω2, t1, Ω2 (t2 - t1))` for cooperativity `c`,
/// scaled around the analytic choice `Ω1 ~ C γ1`, `Ωe ~ C γ2`,
/// `γ1 t1 ~ ln C / C`, `Ω2 ≳ C γ3`.
pub fn pulse_dimensions(c: f64, gamma1: f64, gamma2: f64, gamma3: f64) -> Vec<Dimension> {
    let lc = c.max(std::f64::consts::E).ln() / c;
    vec![
        Dimension::log(0.05 * c * gamma1, 30.0 * c * gamma1),
        Dimension::log(0.1 * c * gamma2, 50.0 * c * gamma2),
        Dimension::log(c * gamma3.max(0.1), 300.0 * c * gamma3.max(0.1)),
        Dimension::log(0.05 * lc / gamma1, 10.0 * lc / gamma1),
        Dimension::linear(0.5, 2.5),
    ]
}

pub(crate) fn initial_guess(c: f64, gamma1: f64, gamma2: f64, gamma3: f64) -> Vec<f64> {
    vec![
        c * gamma1,
        3.0 * c * gamma2,
        20.0 * c * gamma3.max(0.1),
        c.max(std::f64::consts::E).ln() / (c * gamma1),
        std::f64::consts::FRAC_PI_2,
    ]
}

pub(crate) fn params_from(base: &DiamondParams, x: &[f64]) -> DiamondParams {
    let mut p = base.clone();
    p.omega1 = x[0];
    p.omega_e = x[1];
    p.omega2 = x[2];
    p.t1 = x[3];
    p.t2 = x[3] + x[4] / x[2];
    p
}

/// For each cooperativity, minimises `1 - F` over the pulse parameters.
/// Rows come back sorted by cooperativity; a row whose optimiser ran out of
/// budget keeps its best value and carries the flag.
pub fn sweep_error_vs_cooperativity(
    c_values: &[f64],
    settings: &SweepSettings,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    if c_values.is_empty() {
        return Err(Error::param("cooperativities", "empty list"));
    }
    if let Some(c) = c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::param("cooperativities", format!("{c} is not positive")));
    }
    if !(0.0..=1.0).contains(&settings.fiber_fraction) || settings.fiber_fraction == 0.0 {
        return Err(Error::param("fiber_fraction", "must lie in (0, 1]"));
    }
    let mut cs = c_values.to_vec();
    cs.sort_by(f64::total_cmp);

    // rows in parallel; each optimiser runs sequentially so work stays coarse
    let rows = map_indexed(exec, &cs, |_, &c| optimise_row(c, settings));
    rows.into_iter().collect()
}

fn optimise_row(c: f64, s: &SweepSettings) -> Result<SweepRow> {
    let base = DiamondParams {
        g: g_for_cooperativity(c, s.kappa, s.gamma2, s.gamma3)?,
        kappa_f: s.kappa * s.fiber_fraction,
        kappa_l: s.kappa * (1.0 - s.fiber_fraction),
        gamma1: s.gamma1,
        gamma2: s.gamma2,
        gamma3: s.gamma3,
        omega1: 1.0,
        omega_e: 1.0,
        omega2: 1.0,
        t1: 1.0,
        t2: 2.0,
        detunings: Detunings::default(),
    };
    let objective = |x: &[f64]| match simulate_cycle(&params_from(&base, x), &s.cycle) {
        Ok(r) => 1.0 - r.fidelity,
        Err(e) => {
            log::debug!("objective failed at {x:?}: {e}");
            f64::INFINITY
        }
    };
    let dims = pulse_dimensions(c, s.gamma1, s.gamma2, s.gamma3);
    let x0 = initial_guess(c, s.gamma1, s.gamma2, s.gamma3);
    let res = minimize(objective, &dims, Some(&x0), &s.optimizer, Execution::Sequential)?;
    if !res.value.is_finite() {
        return Err(Error::NonFinite("optimised error"));
    }
    if res.budget_exhausted {
        log::warn!("C = {c}: optimiser budget exhausted after {} evaluations", res.evaluations);
    }
    Ok(SweepRow {
        cooperativity: c,
        error: res.value,
        fidelity: 1.0 - res.value,
        params: params_from(&base, &res.x),
        evaluations: res.evaluations,
        converged: res.converged,
        budget_exhausted: res.budget_exhausted,
    })
}
