//! One photon-generation cycle on a [`CavitySpace`] model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::space::{CavitySpace, Sector, FIBER_CHANNEL};
use crate::error::{Error, Result};
use crate::quantum::{
    evolve_heralded, evolve_master, DensityMatrix, Hamiltonian, IntegrationStats, LindbladTerm, SolverOptions, State,
    StateVector, TimeGrid,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Master,
    NoJump,
}

#[derive(Clone, Copy, Debug)]
pub struct CycleOptions {
    pub engine: Engine,
    /// Cavity Fock truncation.
    pub n_max: usize,
    pub solver: SolverOptions,
    /// Output grid points on `[0, t_end]` (at least 2).
    pub samples: usize,
    /// Free evolution appended after `t2`.
    pub settle: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            engine: Engine::Master,
            n_max: 1,
            solver: SolverOptions { record_steps: false, ..SolverOptions::default() },
            samples: 2,
            settle: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleResult {
    /// Population in `|0>` with the photon collected by the fiber. A photon
    /// still inside the cavity at the end counts with weight `kappa_f/kappa`.
    pub rho_0_lambda: f64,
    /// `kappa * rho_0_lambda / kappa_f`
    pub fidelity: f64,
    pub success_probability: f64,
    pub times: Vec<f64>,
    /// `pop_<level>` series summed over sectors and photon numbers, plus
    /// `photon` (mean cavity occupation), `fiber` (tagged weight), `loss`
    /// and `norm` (trace, or squared norm of the no-jump branch).
    pub observables: BTreeMap<String, Vec<f64>>,
    #[serde(skip)]
    pub stats: IntegrationStats,
}

impl CycleResult {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(Vec::as_slice)
    }
}

/// A fully assembled model ready to integrate.
pub(crate) struct CycleModel<'a> {
    pub space: &'a CavitySpace,
    pub hamiltonian: &'a Hamiltonian,
    pub lindblads: &'a [LindbladTerm],
    /// Atomic level holding the initial state and the target `|0>`.
    pub ground: usize,
    pub kappa_f: f64,
    pub kappa_l: f64,
    /// Named groups of atomic levels reported as `pop_<name>`.
    pub probes: &'a [(String, Vec<usize>)],
}

pub(crate) fn run_cycle(model: &CycleModel<'_>, t_end: f64, options: &CycleOptions) -> Result<CycleResult> {
    let space = model.space;
    let kappa = model.kappa_f + model.kappa_l;
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", "kappa_f + kappa_l must be positive"));
    }
    if options.samples < 2 {
        return Err(Error::param("samples", "need at least 2 output points"));
    }
    let grid = TimeGrid::uniform(0.0, t_end, options.samples)?;
    let start = space.index(Sector::Untagged, model.ground, 0).expect("ground level exists");

    // per sample: full diagonal (untagged part from the main state, tagged
    // part from the heralded branch for the no-jump engine) and weight
    let (times, diagonals, norms, stats) = match options.engine {
        Engine::Master => {
            let rho0 = DensityMatrix::basis(space.dim(), start)?;
            let traj = evolve_master(&rho0, model.hamiltonian, model.lindblads, &grid, &options.solver)?;
            let diags: Vec<Vec<f64>> = traj.states.iter().map(State::populations).collect();
            let norms = traj.states.iter().map(State::weight).collect();
            (traj.times, diags, norms, traj.stats)
        }
        Engine::NoJump => {
            let psi0 = StateVector::basis(space.dim(), start)?;
            let her =
                evolve_heralded(&psi0, model.hamiltonian, model.lindblads, &[FIBER_CHANNEL], &grid, &options.solver)?;
            let tagged = space.indices_in_sector(Sector::Tagged);
            let mut diags = Vec::new();
            let mut norms = Vec::new();
            for (s, rho_h) in her.no_jump.states.iter().zip(&her.heralded) {
                let mut d = s.populations();
                for &i in &tagged {
                    d[i] += rho_h.population(i);
                }
                norms.push(s.weight());
                diags.push(d);
            }
            (her.no_jump.times, diags, norms, her.no_jump.stats)
        }
    };

    let basis = space.basis();
    let mut observables: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for d in &diagonals {
        for (name, levels) in model.probes {
            let v: f64 = basis.iter().zip(d).filter(|(b, _)| levels.contains(&b.level)).map(|(_, p)| p).sum();
            observables.entry(format!("pop_{name}")).or_default().push(v);
        }
        let photon: f64 = basis.iter().zip(d).map(|(b, p)| b.photons as f64 * p).sum();
        let fiber: f64 = basis.iter().zip(d).filter(|(b, _)| b.sector == Sector::Tagged).map(|(_, p)| p).sum();
        let loss: f64 = basis.iter().zip(d).filter(|(b, _)| b.level == space.loss_level()).map(|(_, p)| p).sum();
        observables.entry("photon".into()).or_default().push(photon);
        observables.entry("fiber".into()).or_default().push(fiber);
        observables.entry("loss".into()).or_default().push(loss);
    }
    observables.insert("norm".into(), norms);

    let last = diagonals.last().expect("grid has points");
    let collected = last[space.index(Sector::Tagged, model.ground, 0).unwrap()];
    let pending_weight = model.kappa_f / kappa;
    let pending: f64 = (1..=space.n_max()).map(|n| last[space.index(Sector::Untagged, model.ground, n).unwrap()]).sum();
    let rho_0_lambda = collected + pending_weight * pending;

    let tagged_total = *observables["fiber"].last().unwrap();
    let in_cavity: f64 = basis
        .iter()
        .zip(last)
        .filter(|(b, _)| b.sector == Sector::Untagged && b.level != space.loss_level())
        .map(|(b, p)| b.photons as f64 * p)
        .sum();
    let success_probability = (tagged_total + pending_weight * in_cavity).clamp(0.0, 1.0);

    let fidelity = if model.kappa_f > 0.0 { (rho_0_lambda / pending_weight).clamp(0.0, 1.0) } else { 0.0 };

    Ok(CycleResult { rho_0_lambda, fidelity, success_probability, times, observables, stats })
}
