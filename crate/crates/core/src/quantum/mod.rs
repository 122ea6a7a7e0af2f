//! Dense-state open-quantum-system engine.
//!
//! Rates and energies are in units of a caller-chosen reference decay rate
//! `gamma`, times in `1/gamma`.

mod evolve;
mod hamiltonian;
mod integrator;
mod operator;
mod state;

pub use evolve::{
    evolve_heralded, evolve_master, evolve_no_jump, HeraldedTrajectory, LindbladTerm, SolverOptions, TimeGrid,
    Trajectory,
};
pub use hamiltonian::{Envelope, Hamiltonian, HamiltonianTerm, HAMILTONIAN_HERMITIAN_TOL};
pub use integrator::{IntegrationStats, StepControl};
pub use operator::Operator;
pub use state::{expectation, DensityMatrix, State, StateVector, HERMITIAN_TOL, POSITIVITY_TOL};

pub use num_complex::Complex64;
