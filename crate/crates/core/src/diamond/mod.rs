//! Generic five-level diamond scheme coupled to a single cavity mode.
//!
//! `|0> -Ω1-> |e1> -Ωe-> |e2> -g, c†-> |e3> -Ω2-> |0>`, with spontaneous decay
//! of each excited level into its own dump level and the cavity leaking into
//! a fiber and an intra-cavity loss channel.

mod cycle;
mod space;
mod sweep;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Envelope, Hamiltonian, LindbladTerm, Operator};

pub(crate) use cycle::{run_cycle, CycleModel};
pub use cycle::{CycleOptions, CycleResult, Engine};
pub use space::{BasisState, CavitySpace, Sector, FIBER_CHANNEL, LOSS_CHANNEL, LOSS_LABEL};
pub(crate) use sweep::{initial_guess, params_from};
pub use sweep::{pulse_dimensions, sweep_error_vs_cooperativity, SweepRow, SweepSettings};

pub const LEVELS: [&str; 8] = ["0", "1", "e1", "e2", "e3", "d1", "d2", "d3"];
const G0: usize = 0;
const E1: usize = 2;
const E2: usize = 3;
const E3: usize = 4;
const D1: usize = 5;
const D2: usize = 6;
const D3: usize = 7;

/// Detunings of each field from its transition (γ units), default 0.
/// The cavity-photon energy follows from `cavity` so that the
/// `|e2, n> -> |e3, n+1>` step is off by exactly `cavity`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Detunings {
    pub omega1: f64,
    pub omega_e: f64,
    pub omega2: f64,
    pub cavity: f64,
}

/// Rates in units of the reference decay rate γ, times in 1/γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondParams {
    pub g: f64,
    pub kappa_f: f64,
    pub kappa_l: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub omega1: f64,
    pub omega_e: f64,
    pub omega2: f64,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub detunings: Detunings,
}

impl DiamondParams {
    /// Unit decay rates, critically coupled cavity of total width `kappa`,
    /// `g` chosen for cooperativity `c`, drives from the analytic scaling
    /// with `a = 1/2` and a π/2-area transfer pulse.
    pub fn for_cooperativity(c: f64, kappa: f64) -> Result<Self> {
        let (gamma2, gamma3) = (1.0, 1.0);
        let g = g_for_cooperativity(c, kappa, gamma2, gamma3)?;
        if !(c > 1.0) {
            return Err(Error::param("cooperativity", "must exceed 1"));
        }
        let omega1 = 0.5 * c;
        let omega_e = c;
        let t1 = c.ln() / c;
        let omega2 = 10.0 * c;
        Ok(Self {
            g,
            kappa_f: kappa / 2.0,
            kappa_l: kappa / 2.0,
            gamma1: 1.0,
            gamma2,
            gamma3,
            omega1,
            omega_e,
            omega2,
            t1,
            t2: default_t2(t1, omega2),
            detunings: Detunings::default(),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_f + self.kappa_l
    }

    pub fn cooperativity(&self) -> Result<f64> {
        cooperativity(self.g, self.kappa(), self.gamma2, self.gamma3)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("omega1", self.omega1),
            ("omega_e", self.omega_e),
            ("omega2", self.omega2),
            ("detunings.omega1", self.detunings.omega1),
            ("detunings.omega_e", self.detunings.omega_e),
            ("detunings.omega2", self.detunings.omega2),
            ("detunings.cavity", self.detunings.cavity),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, format!("{v} is not finite")));
            }
        }
        let rates = [
            ("kappa_f", self.kappa_f),
            ("kappa_l", self.kappa_l),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("rate {v} must be finite and >= 0")));
            }
        }
        if !(self.kappa() > 0.0) {
            return Err(Error::param("kappa_f", "kappa_f + kappa_l must be positive"));
        }
        if !(self.t1 > 0.0 && self.t2 > self.t1 && self.t2.is_finite()) {
            return Err(Error::param("t1", format!("need 0 < t1 < t2, got t1={} t2={}", self.t1, self.t2)));
        }
        Ok(())
    }
}

/// Switch-off time of a resonant transfer pulse of area π/2 starting at `t1`.
pub fn default_t2(t1: f64, omega2: f64) -> f64 {
    t1 + std::f64::consts::FRAC_PI_2 / omega2.abs().max(f64::MIN_POSITIVE)
}

/// `C = g^2 / (kappa (gamma2 + gamma3))`
pub fn cooperativity(g: f64, kappa: f64, gamma2: f64, gamma3: f64) -> Result<f64> {
    let den = kappa * (gamma2 + gamma3);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DivisionByZero("cooperativity"));
    }
    Ok(g * g / den)
}

/// Coupling that yields cooperativity `c`.
pub fn g_for_cooperativity(c: f64, kappa: f64, gamma2: f64, gamma3: f64) -> Result<f64> {
    if !(c >= 0.0 && kappa > 0.0 && gamma2 + gamma3 > 0.0) {
        return Err(Error::param("cooperativity", "need C >= 0, kappa > 0, gamma2 + gamma3 > 0"));
    }
    Ok((c * kappa * (gamma2 + gamma3)).sqrt())
}

/// The assembled generic model.
#[derive(Clone, Debug)]
pub struct DiamondModel {
    pub params: DiamondParams,
    pub space: CavitySpace,
    pub hamiltonian: Hamiltonian,
    pub lindblads: Vec<LindbladTerm>,
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn hermitian_pair(space: &CavitySpace, a: usize, b: usize) -> Result<Operator> {
    space.atomic_operator(&[(a, b, real(1.0)), (b, a, real(1.0))])
}

impl DiamondModel {
    pub fn new(params: &DiamondParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        let space = CavitySpace::new(LEVELS.iter().map(|s| s.to_string()).collect(), n_max)?;
        let p = params;
        let d = p.detunings;

        let mut h = Hamiltonian::zero(space.dim());
        let e1 = -d.omega1;
        let e2 = -d.omega1 - d.omega_e;
        let e3 = -d.omega2;
        let diag = space.atomic_operator(&[(E1, E1, real(e1)), (E2, E2, real(e2)), (E3, E3, real(e3))])?;
        let static_part = diag
            .add(&space.photon_energy(e2 - e3 - d.cavity)?)?
            .add(&hermitian_pair(&space, E2, E1)?.scale(real(p.omega_e)))?
            .add(&space.cavity_coupling(&[(E3, E2, real(p.g))])?)?;
        h.push(static_part, Envelope::Constant(1.0))?;
        h.push(hermitian_pair(&space, E1, G0)?, Envelope::Square { amplitude: p.omega1, start: 0.0, end: p.t1 })?;
        h.push(hermitian_pair(&space, G0, E3)?, Envelope::Square { amplitude: p.omega2, start: p.t1, end: p.t2 })?;

        let lindblads = build_lindblads_on(&space, p)?;
        Ok(Self { params: p.clone(), space, hamiltonian: h, lindblads })
    }

    /// Integrates one cycle from `|0, 0_ph>` over `[0, t2 + settle]`.
    pub fn simulate(&self, options: &CycleOptions) -> Result<CycleResult> {
        if !(options.settle >= 0.0 && options.settle.is_finite()) {
            return Err(Error::param("settle", "must be finite and >= 0"));
        }
        let probes: Vec<(String, Vec<usize>)> = vec![
            ("0".into(), vec![G0]),
            ("1".into(), vec![1]),
            ("e1".into(), vec![E1]),
            ("e2".into(), vec![E2]),
            ("e3".into(), vec![E3]),
            ("dump".into(), vec![D1, D2, D3]),
        ];
        let model = CycleModel {
            space: &self.space,
            hamiltonian: &self.hamiltonian,
            lindblads: &self.lindblads,
            ground: G0,
            kappa_f: self.params.kappa_f,
            kappa_l: self.params.kappa_l,
            probes: &probes,
        };
        run_cycle(&model, self.params.t2 + options.settle, options)
    }
}

/// `H(t) = Ω1(t)|e1><0| + Ωe|e2><e1| + Ω2(t)|0><e3| + g|e3><e2|c† + h.c.`
/// (plus detunings) on the default `n_max = 1` space.
pub fn build_hamiltonian(params: &DiamondParams, t: f64) -> Result<Operator> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be >= 0"));
    }
    Ok(DiamondModel::new(params, 1)?.hamiltonian.at(t))
}

/// Jump operators on the default `n_max = 1` space.
pub fn build_lindblads(params: &DiamondParams) -> Result<Vec<LindbladTerm>> {
    params.validate()?;
    let space = CavitySpace::new(LEVELS.iter().map(|s| s.to_string()).collect(), 1)?;
    build_lindblads_on(&space, params)
}

fn build_lindblads_on(space: &CavitySpace, p: &DiamondParams) -> Result<Vec<LindbladTerm>> {
    let mut out = Vec::new();
    for (ch, rate, from, to) in
        [("gamma1", p.gamma1, E1, D1), ("gamma2", p.gamma2, E2, D2), ("gamma3", p.gamma3, E3, D3)]
    {
        if rate > 0.0 {
            out.push(space.decay_term(ch, rate, &[(to, from, real(1.0))])?);
        }
    }
    out.extend(space.cavity_terms(p.kappa_f, p.kappa_l)?);
    Ok(out)
}

/// Builds the model and runs one cycle.
pub fn simulate_cycle(params: &DiamondParams, options: &CycleOptions) -> Result<CycleResult> {
    DiamondModel::new(params, options.n_max)?.simulate(options)
}
