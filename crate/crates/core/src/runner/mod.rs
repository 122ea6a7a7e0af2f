//! Experiment configuration, orchestration and result tables.

mod experiments;
mod table;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atomic::{AtomSpec, ModelOptions};
use crate::cavity::CavityParams;
use crate::diamond::{CycleOptions, DiamondParams};
use crate::error::{Error, Result};
use crate::optimize::OptimizerSettings;
use crate::par::Execution;
use crate::quantum::SolverOptions;

pub use experiments::run_experiment;
pub use table::{previous_config_hash, Cell, Metadata, ResultTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ErrorScaling,
    TimeTrace,
    PuritySweep,
    Combined,
    CavityParams,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::ErrorScaling,
        ExperimentKind::TimeTrace,
        ExperimentKind::PuritySweep,
        ExperimentKind::Combined,
        ExperimentKind::CavityParams,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ErrorScaling => "error-scaling",
            ExperimentKind::TimeTrace => "time-trace",
            ExperimentKind::PuritySweep => "purity-sweep",
            ExperimentKind::Combined => "combined",
            ExperimentKind::CavityParams => "cavity-params",
        }
    }

    /// Tier used when neither the config nor the command line picks one.
    pub fn default_tier(self) -> Tier {
        match self {
            ExperimentKind::ErrorScaling | ExperimentKind::TimeTrace => Tier::Generic,
            _ => Tier::FullCesium,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Generic,
    FullCesium,
    FullRubidium,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Generic => "generic",
            Tier::FullCesium => "full-cesium",
            Tier::FullRubidium => "full-rubidium",
        }
    }

    /// Atomic data behind the tier. The generic tier borrows cesium's
    /// reference rate for unit conversions.
    pub fn atom(self) -> AtomSpec {
        match self {
            Tier::Generic | Tier::FullCesium => AtomSpec::cesium(),
            Tier::FullRubidium => AtomSpec::rubidium(),
        }
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Tier::Generic, Tier::FullCesium, Tier::FullRubidium]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config("tier", format!("unknown tier `{s}`")))
    }
}

/// Intensity purities of the three drives and the cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuritySet {
    pub omega1: f64,
    pub omega_e: f64,
    pub omega2: f64,
    pub cavity: f64,
}

impl PuritySet {
    pub fn uniform(p: f64) -> Self {
        Self { omega1: p, omega_e: p, omega2: p, cavity: p }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.omega1, self.omega_e, self.omega2, self.cavity]
    }
}

/// A purity entry: one number for every field, or one per field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PurityEntry {
    Uniform(f64),
    PerField(PuritySet),
}

impl PurityEntry {
    pub fn set(&self) -> PuritySet {
        match *self {
            PurityEntry::Uniform(p) => PuritySet::uniform(p),
            PurityEntry::PerField(s) => s,
        }
    }
}

/// Integration settings shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Generic-tier tolerance.
    pub tol: f64,
    /// Full-tier tolerance.
    pub full_tol: f64,
    pub n_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, full_tol: 1e-6, n_max: 1 }
    }
}

impl SolverConfig {
    pub fn cycle(&self, full: bool) -> CycleOptions {
        CycleOptions {
            n_max: self.n_max,
            solver: SolverOptions {
                record_steps: false,
                ..SolverOptions::with_tol(if full { self.full_tol } else { self.tol })
            },
            ..CycleOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorScalingConfig {
    pub cooperativities: Vec<f64>,
    pub kappa: f64,
    pub fiber_fraction: f64,
    /// Generic-tier decay rates `(γ1, γ2, γ3)`.
    pub gammas: [f64; 3],
}

impl Default for ErrorScalingConfig {
    fn default() -> Self {
        Self {
            cooperativities: vec![10.0, 30.0, 100.0, 300.0, 1000.0],
            kappa: 2000.0,
            fiber_fraction: 0.5,
            gammas: [1.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeTraceConfig {
    pub cooperativity: f64,
    pub kappa: f64,
    pub fiber_fraction: f64,
    pub gammas: [f64; 3],
    pub samples: usize,
    /// Full tiers only.
    pub purity: PurityEntry,
    /// Fixed pulse parameters; optimised when absent.
    pub params: Option<DiamondParams>,
}

impl Default for TimeTraceConfig {
    fn default() -> Self {
        Self {
            cooperativity: 10.0,
            kappa: 2000.0,
            fiber_fraction: 0.5,
            gammas: [1.0; 3],
            samples: 201,
            purity: PurityEntry::Uniform(1.0),
            params: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PuritySweepConfig {
    pub cooperativities: Vec<f64>,
    pub kappa: f64,
    pub fiber_fraction: f64,
    pub purities: Vec<PurityEntry>,
}

impl Default for PuritySweepConfig {
    fn default() -> Self {
        Self {
            cooperativities: vec![5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            kappa: 200.0,
            fiber_fraction: 0.5,
            purities: vec![PurityEntry::Uniform(1.0), PurityEntry::Uniform(0.9), PurityEntry::Uniform(0.8)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombinedConfig {
    pub cooperativity: f64,
    pub kappa: f64,
    pub fiber_fraction: f64,
    pub purities: PuritySet,
    /// Ω1 pulse length `t1`.
    pub omega1_pulse_ns: f64,
    /// Ω2 pulse length `t2 - t1`.
    pub omega2_pulse_ns: f64,
    /// Free evolution after the Ω2 pulse.
    pub settle_ns: f64,
}

impl Default for CombinedConfig {
    fn default() -> Self {
        Self {
            cooperativity: 35.0,
            kappa: 200.0,
            fiber_fraction: 0.5,
            purities: PuritySet { omega1: 0.9389, omega_e: 0.9779, omega2: 0.9499, cavity: 0.9766 },
            omega1_pulse_ns: 2.5,
            omega2_pulse_ns: 0.5,
            settle_ns: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    /// Device parameters; the bundled cesium cavity when absent.
    pub params: Option<CavityParams>,
    pub distances_nm: Vec<f64>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self { params: None, distances_nm: (0..=16).map(|k| 25.0 * k as f64).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the experiment named on the command line when present.
    pub experiment: Option<ExperimentKind>,
    pub tier: Option<Tier>,
    /// Overrides the seed of both optimisers.
    pub seed: Option<u64>,
    /// Generic-tier search (and the warm start of full-tier searches).
    pub optimizer: OptimizerSettings,
    /// Full-tier search.
    pub full_optimizer: OptimizerSettings,
    pub solver: SolverConfig,
    pub model: ModelOptions,
    pub error_scaling: ErrorScalingConfig,
    pub time_trace: TimeTraceConfig,
    pub purity_sweep: PuritySweepConfig,
    pub combined: CombinedConfig,
    pub cavity: CavityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            tier: None,
            seed: None,
            optimizer: OptimizerSettings::default(),
            full_optimizer: OptimizerSettings {
                max_evaluations: 60,
                grid_points: 0,
                grid_starts: 0,
                random_starts: 0,
                xtol: 1e-3,
                ftol: 1e-6,
                initial_step: 0.05,
                ..OptimizerSettings::default()
            },
            solver: SolverConfig::default(),
            model: ModelOptions::default(),
            error_scaling: ErrorScalingConfig::default(),
            time_trace: TimeTraceConfig::default(),
            purity_sweep: PuritySweepConfig::default(),
            combined: CombinedConfig::default(),
            cavity: CavityConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies command-line overrides and the experiment's default tier.
    pub fn resolve(mut self, experiment: ExperimentKind, tier: Option<Tier>, seed: Option<u64>) -> Result<Self> {
        if let Some(named) = self.experiment {
            if named != experiment {
                return Err(Error::config("experiment", format!("config is for `{named}`, not `{experiment}`")));
            }
        }
        self.experiment = Some(experiment);
        self.tier = Some(tier.or(self.tier).unwrap_or(experiment.default_tier()));
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.optimizer.seed = s;
            self.full_optimizer.seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |field: &str, r: Result<()>| r.map_err(|e| Error::config(field, e.to_string()));
        wrap("optimizer", self.optimizer.validate())?;
        wrap("full_optimizer", self.full_optimizer.validate())?;
        for (field, tol) in [("solver.tol", self.solver.tol), ("solver.full_tol", self.solver.full_tol)] {
            if !(1e-12..=1e-4).contains(&tol) {
                return Err(Error::config(field, format!("{tol:e} outside [1e-12, 1e-4]")));
            }
        }
        if !(1..=4).contains(&self.solver.n_max) {
            return Err(Error::config("solver.n_max", "must lie in 1..=4"));
        }
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must be positive")))
            }
        };
        let fraction = |field: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must lie in (0, 1]")))
            }
        };
        let list = |field: &str, v: &[f64]| {
            if v.is_empty() {
                return Err(Error::config(field, "must not be empty"));
            }
            v.iter().try_for_each(|&c| positive(field, c))
        };
        let purities = |field: &str, s: PuritySet| s.as_array().iter().try_for_each(|&p| fraction(field, p));

        let es = &self.error_scaling;
        list("error_scaling.cooperativities", &es.cooperativities)?;
        positive("error_scaling.kappa", es.kappa)?;
        fraction("error_scaling.fiber_fraction", es.fiber_fraction)?;
        es.gammas.iter().try_for_each(|&g| positive("error_scaling.gammas", g))?;

        let tt = &self.time_trace;
        positive("time_trace.cooperativity", tt.cooperativity)?;
        positive("time_trace.kappa", tt.kappa)?;
        fraction("time_trace.fiber_fraction", tt.fiber_fraction)?;
        tt.gammas.iter().try_for_each(|&g| positive("time_trace.gammas", g))?;
        if tt.samples < 2 {
            return Err(Error::config("time_trace.samples", "need at least 2"));
        }
        purities("time_trace.purity", tt.purity.set())?;
        if let Some(p) = &tt.params {
            p.validate().map_err(|e| Error::config("time_trace.params", e.to_string()))?;
        }

        let ps = &self.purity_sweep;
        list("purity_sweep.cooperativities", &ps.cooperativities)?;
        positive("purity_sweep.kappa", ps.kappa)?;
        fraction("purity_sweep.fiber_fraction", ps.fiber_fraction)?;
        if ps.purities.is_empty() {
            return Err(Error::config("purity_sweep.purities", "must not be empty"));
        }
        ps.purities.iter().try_for_each(|p| purities("purity_sweep.purities", p.set()))?;

        let cb = &self.combined;
        positive("combined.cooperativity", cb.cooperativity)?;
        positive("combined.kappa", cb.kappa)?;
        fraction("combined.fiber_fraction", cb.fiber_fraction)?;
        purities("combined.purities", cb.purities)?;
        positive("combined.omega1_pulse_ns", cb.omega1_pulse_ns)?;
        positive("combined.omega2_pulse_ns", cb.omega2_pulse_ns)?;
        if !(cb.settle_ns >= 0.0 && cb.settle_ns.is_finite()) {
            return Err(Error::config("combined.settle_ns", "must be finite and >= 0"));
        }

        if let Some(p) = &self.cavity.params {
            p.validate().map_err(|e| Error::config("cavity.params", e.to_string()))?;
        }
        if self.cavity.distances_nm.is_empty() || self.cavity.distances_nm.iter().any(|z| !(*z >= 0.0 && z.is_finite()))
        {
            return Err(Error::config("cavity.distances_nm", "need a non-empty list of finite distances >= 0"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

/// How rows are distributed.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub exec: Execution,
    /// Worker threads; `None` keeps the global pool.
    pub jobs: Option<usize>,
}
