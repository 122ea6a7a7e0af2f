use std::time::Instant;

use super::{ExperimentConfig, ExperimentKind, PuritySet, ResultTable, RunOptions, Tier};
use crate::analytic::fidelity_closed_form;
use crate::atomic::{
    purity_fidelity_curve, uniform_drives, AtomSpec, FullModel, PulseTiming, PurityRow, PuritySettings,
};
use crate::cavity::{cavity_point, g_from_mode_volume, CavityParams, GammaUnit};
use crate::diamond::{
    g_for_cooperativity, simulate_cycle, sweep_error_vs_cooperativity, CycleResult, Detunings, DiamondParams,
    SweepSettings,
};
use crate::error::{Error, Result};
use crate::optimize::{minimize, Dimension};
use crate::par::{with_jobs, Execution};
use crate::quantum::Envelope;

/// Runs a resolved config (see [`ExperimentConfig::resolve`]) and fills the
/// table metadata.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ResultTable> {
    let kind = config.experiment.ok_or_else(|| Error::config("experiment", "config not resolved"))?;
    let tier = config.tier.ok_or_else(|| Error::config("tier", "config not resolved"))?;
    config.validate()?;
    let atom = tier.atom();
    let start = Instant::now();
    let exec = options.exec;
    let mut table = with_jobs(options.jobs, || match kind {
        ExperimentKind::ErrorScaling => run_error_scaling(config, &atom, tier, exec),
        ExperimentKind::TimeTrace => run_time_trace(config, &atom, tier, exec),
        ExperimentKind::PuritySweep => run_purity_sweep(config, &atom, tier, exec),
        ExperimentKind::Combined => run_combined(config, &atom, tier, exec),
        ExperimentKind::CavityParams => run_cavity_params(config, &atom, tier),
    })??;

    let m = &mut table.metadata;
    m.experiment = kind.name().to_string();
    m.tier = tier.name().to_string();
    m.config_hash = config.hash();
    m.code_version = env!("CARGO_PKG_VERSION").to_string();
    m.atomic_data_species = atom.species.clone();
    m.atomic_data_version = atom.data_version.clone();
    m.data_provenance.splice(0..0, atom.provenance.iter().cloned());
    m.gamma_2pi_mhz = atom.reference_gamma_2pi_mhz();
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.created_unix_s = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
    if let Some(flags) = table.column("budget_exhausted") {
        let any = flags.iter().any(|c| matches!(c, super::Cell::Bool(true)));
        table.metadata.budget_exhausted = any;
    }
    Ok(table)
}

fn role_rates(atom: &AtomSpec) -> Result<[f64; 3]> {
    let level = |r: &str| atom.role(r).map(|s| atom.gamma(&s.level));
    Ok([level("e1")?, level("e2")?, level("e3")?])
}

fn base_params(c: f64, kappa: f64, fiber_fraction: f64, rates: [f64; 3]) -> Result<DiamondParams> {
    Ok(DiamondParams {
        g: g_for_cooperativity(c, kappa, rates[1], rates[2])?,
        kappa_f: kappa * fiber_fraction,
        kappa_l: kappa * (1.0 - fiber_fraction),
        gamma1: rates[0],
        gamma2: rates[1],
        gamma3: rates[2],
        omega1: 1.0,
        omega_e: 1.0,
        omega2: 1.0,
        t1: 1.0,
        t2: 2.0,
        detunings: Detunings::default(),
    })
}

fn purity_settings(config: &ExperimentConfig, kappa: f64, fiber_fraction: f64, timing: PulseTiming) -> PuritySettings {
    PuritySettings {
        kappa,
        fiber_fraction,
        timing,
        optimizer: config.full_optimizer.clone(),
        generic_start: Some(config.optimizer.clone()),
        cycle: config.solver.cycle(true),
        model: config.model,
    }
}

fn budget_warning(table: &mut ResultTable, c: f64, evaluations: usize, exhausted: bool) {
    if exhausted {
        table.warn(format!("C = {c}: optimiser budget exhausted after {evaluations} evaluations"));
    }
}

const SCALING_COLUMNS: [&str; 13] = [
    "cooperativity",
    "fidelity",
    "error",
    "scaled_error",
    "analytic_error",
    "omega1",
    "omega_e",
    "omega2",
    "t1",
    "t2",
    "evaluations",
    "converged",
    "budget_exhausted",
];

fn analytic_error(table: &mut ResultTable, p: &DiamondParams) -> f64 {
    match fidelity_closed_form(p, p.t1) {
        Ok(f) => 1.0 - f,
        Err(e) => {
            table.warn(format!("closed form unavailable at C = {:?}: {e}", p.cooperativity().ok()));
            f64::NAN
        }
    }
}

pub fn run_error_scaling(
    config: &ExperimentConfig,
    atom: &AtomSpec,
    tier: Tier,
    exec: Execution,
) -> Result<ResultTable> {
    let es = &config.error_scaling;
    let mut table = ResultTable::new(&SCALING_COLUMNS);
    // (C, F, params, evaluations, converged, exhausted)
    let rows: Vec<(f64, f64, DiamondParams, usize, bool, bool)> = if tier == Tier::Generic {
        let settings = SweepSettings {
            kappa: es.kappa,
            fiber_fraction: es.fiber_fraction,
            gamma1: es.gammas[0],
            gamma2: es.gammas[1],
            gamma3: es.gammas[2],
            optimizer: config.optimizer.clone(),
            cycle: config.solver.cycle(false),
        };
        sweep_error_vs_cooperativity(&es.cooperativities, &settings, exec)?
            .into_iter()
            .map(|r| (r.cooperativity, r.fidelity, r.params, r.evaluations, r.converged, r.budget_exhausted))
            .collect()
    } else {
        let rates = role_rates(atom)?;
        let s = purity_settings(config, es.kappa, es.fiber_fraction, PulseTiming::Free);
        purity_fidelity_curve(atom, [1.0; 4], &es.cooperativities, &s, exec)?
            .into_iter()
            .map(|r| {
                let p = generic_view(&r, es.kappa, es.fiber_fraction, rates)?;
                Ok((r.cooperativity, r.fidelity, p, r.evaluations, r.converged, r.budget_exhausted))
            })
            .collect::<Result<_>>()?
    };
    for (c, f, p, evals, converged, exhausted) in rows {
        budget_warning(&mut table, c, evals, exhausted);
        let error = 1.0 - f;
        let analytic = analytic_error(&mut table, &p);
        table.push(vec![
            c.into(),
            f.into(),
            error.into(),
            (error * c / c.ln()).into(),
            analytic.into(),
            p.omega1.into(),
            p.omega_e.into(),
            p.omega2.into(),
            p.t1.into(),
            p.t2.into(),
            evals.into(),
            converged.into(),
            exhausted.into(),
        ])?;
    }
    table.note("kappa", es.kappa);
    Ok(table)
}

/// Five-level parameters with the amplitudes and times of a full-model row.
fn generic_view(row: &PurityRow, kappa: f64, fiber_fraction: f64, rates: [f64; 3]) -> Result<DiamondParams> {
    let mut p = base_params(row.cooperativity, kappa, fiber_fraction, rates)?;
    p.omega1 = row.drives.omega1.amplitude;
    p.omega_e = row.drives.omega_e.amplitude;
    p.omega2 = row.drives.omega2.amplitude;
    p.t1 = row.drives.t1;
    p.t2 = row.drives.t2;
    Ok(p)
}

const TRACE_COLUMNS: [&str; 12] =
    ["t", "omega1", "omega2", "pop_0", "pop_1", "pop_e1", "pop_e2", "pop_e3", "pop_photon", "sinks", "other", "norm"];

pub fn run_time_trace(config: &ExperimentConfig, atom: &AtomSpec, tier: Tier, exec: Execution) -> Result<ResultTable> {
    let tt = &config.time_trace;
    let full = tier != Tier::Generic;
    let rates = if full { role_rates(atom)? } else { tt.gammas };
    let params = match &tt.params {
        Some(p) => p.clone(),
        None => {
            let settings = SweepSettings {
                kappa: tt.kappa,
                fiber_fraction: tt.fiber_fraction,
                gamma1: rates[0],
                gamma2: rates[1],
                gamma3: rates[2],
                optimizer: config.optimizer.clone(),
                cycle: config.solver.cycle(full),
            };
            let row = sweep_error_vs_cooperativity(&[tt.cooperativity], &settings, exec)?.remove(0);
            row.params
        }
    };
    let mut cycle = config.solver.cycle(full);
    cycle.samples = tt.samples;
    let result: CycleResult = if full {
        let x = [params.omega1, params.omega_e, params.omega2, params.t1, params.omega2 * (params.t2 - params.t1)];
        let mut d = uniform_drives(atom, tt.purity.set().as_array(), &x, params.g)?;
        d.t2 = params.t2;
        let model = FullModel::new(atom, &d, params.kappa_f, params.kappa_l, &config.model, cycle.n_max)?;
        model.simulate(&cycle)?
    } else {
        simulate_cycle(&params, &cycle)?
    };

    let env1 = Envelope::Square { amplitude: params.omega1, start: 0.0, end: params.t1 };
    let env2 = Envelope::Square { amplitude: params.omega2, start: params.t1, end: params.t2 };
    let series = |name: &str| -> Result<&[f64]> {
        result.observable(name).ok_or_else(|| Error::InvalidState(format!("missing observable {name}")))
    };
    let pops: Vec<&[f64]> =
        ["pop_0", "pop_1", "pop_e1", "pop_e2", "pop_e3"].iter().map(|n| series(n)).collect::<Result<_>>()?;
    let sink_series: Vec<&[f64]> = ["pop_dump", "loss"].iter().map(|n| series(n)).collect::<Result<_>>()?;
    let (photon, norm) = (series("photon")?, series("norm")?);

    let mut table = ResultTable::new(&TRACE_COLUMNS);
    for (i, &t) in result.times.iter().enumerate() {
        let listed: f64 = pops.iter().map(|s| s[i]).sum();
        let sink: f64 = sink_series.iter().map(|s| s[i]).sum();
        let mut row = vec![t.into(), env1.value(t).into(), env2.value(t).into()];
        row.extend(pops.iter().map(|s| s[i].into()));
        row.extend([photon[i].into(), sink.into(), (norm[i] - listed - sink).into(), norm[i].into()]);
        table.push(row)?;
    }
    table.note("params", &params);
    table.note("fidelity", result.fidelity);
    table.note("rho_0_lambda", result.rho_0_lambda);
    Ok(table)
}

const PURITY_COLUMNS: [&str; 16] = [
    "purity_omega1",
    "purity_omega_e",
    "purity_omega2",
    "purity_cavity",
    "cooperativity",
    "fidelity",
    "generic_fidelity",
    "omega1",
    "omega_e",
    "omega2",
    "t1",
    "t2",
    "settle",
    "evaluations",
    "converged",
    "budget_exhausted",
];

fn purity_cells(r: &PurityRow, settle: f64) -> Vec<super::Cell> {
    let mut row: Vec<super::Cell> = r.purities.iter().map(|&p| p.into()).collect();
    row.extend([
        r.cooperativity.into(),
        r.fidelity.into(),
        r.generic_fidelity.unwrap_or(f64::NAN).into(),
        r.drives.omega1.amplitude.into(),
        r.drives.omega_e.amplitude.into(),
        r.drives.omega2.amplitude.into(),
        r.drives.t1.into(),
        r.drives.t2.into(),
        settle.into(),
        r.evaluations.into(),
        r.converged.into(),
        r.budget_exhausted.into(),
    ]);
    row
}

fn require_full(tier: Tier, experiment: &str) -> Result<()> {
    if tier == Tier::Generic {
        return Err(Error::config("tier", format!("{experiment} needs a full tier (full-cesium or full-rubidium)")));
    }
    Ok(())
}

pub fn run_purity_sweep(
    config: &ExperimentConfig,
    atom: &AtomSpec,
    tier: Tier,
    exec: Execution,
) -> Result<ResultTable> {
    require_full(tier, "purity-sweep")?;
    let ps = &config.purity_sweep;
    let s = purity_settings(config, ps.kappa, ps.fiber_fraction, PulseTiming::Free);
    let mut table = ResultTable::new(&PURITY_COLUMNS);
    for entry in &ps.purities {
        for r in purity_fidelity_curve(atom, entry.set().as_array(), &ps.cooperativities, &s, exec)? {
            budget_warning(&mut table, r.cooperativity, r.evaluations, r.budget_exhausted);
            table.push(purity_cells(&r, 0.0))?;
        }
    }
    table.note("kappa", ps.kappa);
    Ok(table)
}

pub fn run_combined(config: &ExperimentConfig, atom: &AtomSpec, tier: Tier, exec: Execution) -> Result<ResultTable> {
    let cb = &config.combined;
    let unit = GammaUnit::of_atom(atom)?;
    let t1 = unit.time_to_gamma(cb.omega1_pulse_ns * 1e-9);
    let t2 = t1 + unit.time_to_gamma(cb.omega2_pulse_ns * 1e-9);
    let settle = unit.time_to_gamma(cb.settle_ns * 1e-9);
    let timing = PulseTiming::Fixed { t1, t2 };
    let mut table = ResultTable::new(&PURITY_COLUMNS);
    let row = if tier == Tier::Generic {
        combined_generic(config, atom, t1, t2, settle)?
    } else {
        let mut s = purity_settings(config, cb.kappa, cb.fiber_fraction, timing);
        s.cycle.settle = settle;
        purity_fidelity_curve(atom, cb.purities.as_array(), &[cb.cooperativity], &s, exec)?.remove(0)
    };
    budget_warning(&mut table, row.cooperativity, row.evaluations, row.budget_exhausted);
    table.push(purity_cells(&row, settle))?;
    table.note("t1_gamma", t1);
    table.note("t2_gamma", t2);
    table.note("settle_gamma", settle);
    table.note("kappa", cb.kappa);
    Ok(table)
}

/// Five-level model with the same fixed pulse windows; purities play no role.
fn combined_generic(config: &ExperimentConfig, atom: &AtomSpec, t1: f64, t2: f64, settle: f64) -> Result<PurityRow> {
    let cb = &config.combined;
    let rates = role_rates(atom)?;
    let base = base_params(cb.cooperativity, cb.kappa, cb.fiber_fraction, rates)?;
    let mut cycle = config.solver.cycle(false);
    cycle.settle = settle;
    let params = |x: &[f64]| DiamondParams { omega1: x[0], omega_e: x[1], omega2: x[2], t1, t2, ..base.clone() };
    let objective = |x: &[f64]| simulate_cycle(&params(x), &cycle).map_or(f64::INFINITY, |r| 1.0 - r.fidelity);
    let c = cb.cooperativity;
    let dims = vec![
        Dimension::log(0.05 * c * rates[0], 30.0 * c * rates[0]),
        Dimension::log(0.1 * c * rates[1], 50.0 * c * rates[1]),
        Dimension::log(0.1 / (t2 - t1), 100.0 / (t2 - t1)),
    ];
    let x0 = [c * rates[0], 3.0 * c * rates[1], std::f64::consts::FRAC_PI_2 / (t2 - t1)];
    let res = minimize(objective, &dims, Some(&x0), &config.optimizer, Execution::Sequential)?;
    if !res.value.is_finite() {
        return Err(Error::NonFinite("optimised error"));
    }
    let x = [res.x[0], res.x[1], res.x[2], t1, res.x[2] * (t2 - t1)];
    let mut drives = uniform_drives(atom, PuritySet::uniform(1.0).as_array(), &x, base.g)?;
    drives.t2 = t2;
    Ok(PurityRow {
        purities: [1.0; 4],
        cooperativity: c,
        fidelity: 1.0 - res.value,
        generic_fidelity: Some(1.0 - res.value),
        drives,
        evaluations: res.evaluations,
        converged: res.converged,
        budget_exhausted: res.budget_exhausted,
    })
}

const CAVITY_COLUMNS: [&str; 8] =
    ["distance_nm", "g_2pi_ghz", "g_gamma", "kappa_2pi_ghz", "kappa_gamma", "kappa_f", "kappa_l", "cooperativity"];

pub fn run_cavity_params(config: &ExperimentConfig, atom: &AtomSpec, tier: Tier) -> Result<ResultTable> {
    let params = match (&config.cavity.params, tier) {
        (Some(p), _) => p.clone(),
        (None, Tier::FullRubidium) => {
            return Err(Error::config("cavity.params", "no bundled cavity design for rubidium; give cavity.params"))
        }
        (None, _) => CavityParams::cesium_pcc()?,
    };
    let unit = GammaUnit::of_atom(atom)?;
    let [_, g2, g3] = role_rates(atom)?;
    let mut table = ResultTable::new(&CAVITY_COLUMNS);
    for &z in &config.cavity.distances_nm {
        let p = cavity_point(&params, z, unit, g2, g3)?;
        table.push(vec![
            z.into(),
            p.g.ghz_2pi().into(),
            p.g.gamma.into(),
            p.kappa.ghz_2pi().into(),
            p.kappa.gamma.into(),
            p.kappa_f.into(),
            p.kappa_l.into(),
            p.cooperativity.into(),
        ])?;
    }
    let peak = g_from_mode_volume(&params, unit)?;
    let surface = cavity_point(&params, 0.0, unit, g2, g3)?;
    let trap = cavity_point(&params, params.surface_distance_nm, unit, g2, g3)?;
    table.note("cavity", &params);
    table.note("peak_g_2pi_ghz", peak.ghz_2pi());
    table.note("peak_cooperativity", crate::diamond::cooperativity(peak.gamma, surface.kappa.gamma, g2, g3)?);
    table.note("surface_cooperativity", surface.cooperativity);
    table.note("trap_cooperativity", trap.cooperativity);
    table.note("kappa_2pi_ghz", surface.kappa.ghz_2pi());
    if config.cavity.params.is_none() {
        let provenance: serde_json::Value =
            serde_json::from_str(include_str!("../../data/cavity_pcc.json")).map_err(Error::Json)?;
        if let Some(list) = provenance["provenance"].as_array() {
            table.metadata.data_provenance.extend(list.iter().filter_map(|v| v.as_str().map(String::from)));
        }
    }
    Ok(table)
}
