use std::f64::consts::PI;

use diamond_node::quantum::*;
use diamond_node::Error;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sigma_x(dim: usize, a: usize, b: usize, amp: f64) -> Operator {
    Operator::from_triplets(dim, [(a, b, c(amp)), (b, a, c(amp))]).unwrap()
}

fn decay(dim: usize, from: usize, to: usize, rate: f64) -> LindbladTerm {
    LindbladTerm::new("decay", rate, Operator::transition(dim, to, from).unwrap()).unwrap()
}

#[test]
fn zero_generator_keeps_state_constant() {
    let rho0 = DensityMatrix::from_pure(&StateVector::new(vec![c(0.6), Complex64::new(0.0, 0.8)]).unwrap());
    let grid = TimeGrid::uniform(0.0, 3.0, 7).unwrap();
    let traj = evolve_master(&rho0, &Hamiltonian::zero(2), &[], &grid, &SolverOptions::default()).unwrap();
    assert_eq!(traj.states.len(), 7);
    for s in &traj.states {
        match s {
            State::Mixed(r) => assert!((r.matrix() - rho0.matrix()).norm() < 1e-14),
            State::Pure(_) => unreachable!(),
        }
    }
}

#[test]
fn resonant_rabi_pi_pulse() {
    let omega = 1.7;
    let h = Hamiltonian::constant(sigma_x(2, 0, 1, omega)).unwrap();
    let t = PI / (2.0 * omega);
    let grid = TimeGrid::new(vec![0.0, t]).unwrap();
    let rho0 = DensityMatrix::basis(2, 0).unwrap();
    let traj = evolve_master(&rho0, &h, &[], &grid, &SolverOptions::with_tol(1e-10)).unwrap();
    assert!((traj.final_state().population(1) - 1.0).abs() < 1e-8);

    let psi =
        evolve_no_jump(&StateVector::basis(2, 0).unwrap(), &h, &[], &grid, &SolverOptions::with_tol(1e-10)).unwrap();
    assert!((psi.final_state().population(1) - 1.0).abs() < 1e-8);
}

#[test]
fn spontaneous_decay_is_exponential() {
    let gamma = 2.5;
    let grid = TimeGrid::uniform(0.0, 1.0 / gamma, 11).unwrap();
    let rho0 = DensityMatrix::basis(2, 1).unwrap();
    let terms = [decay(2, 1, 0, gamma)];
    let traj = evolve_master(&rho0, &Hamiltonian::zero(2), &terms, &grid, &SolverOptions::with_tol(1e-10)).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert!((s.population(1) - (-gamma * t).exp()).abs() < 1e-8, "t = {t}");
        assert!((s.weight() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn no_jump_norm_without_dissipation_is_one() {
    let h = Hamiltonian::constant(sigma_x(3, 0, 1, 2.0).add(&sigma_x(3, 1, 2, 0.7)).unwrap()).unwrap();
    let grid = TimeGrid::uniform(0.0, 5.0, 51).unwrap();
    let traj =
        evolve_no_jump(&StateVector::basis(3, 0).unwrap(), &h, &[], &grid, &SolverOptions::with_tol(1e-10)).unwrap();
    for n in traj.observable("norm").unwrap() {
        assert!((n - 1.0).abs() < 1e-9);
    }
}

#[test]
fn no_jump_norm_tracks_decay() {
    let gamma = 1.0;
    let grid = TimeGrid::uniform(0.0, 3.0, 31).unwrap();
    let terms = [decay(2, 1, 0, gamma)];
    let traj = evolve_no_jump(
        &StateVector::basis(2, 1).unwrap(),
        &Hamiltonian::zero(2),
        &terms,
        &grid,
        &SolverOptions::with_tol(1e-10),
    )
    .unwrap();
    let norm = traj.observable("norm").unwrap();
    let jumps = traj.observable("jump:decay").unwrap();
    for ((t, n), j) in traj.times.iter().zip(norm).zip(jumps) {
        assert!((n - (-gamma * t).exp()).abs() < 1e-8);
        // probability bookkeeping
        assert!((n + j - 1.0).abs() < 1e-6);
    }
}

#[test]
fn heralded_branch_matches_master_equation() {
    // |2> --drive--> |1> --herald--> |0>, plus a lossy channel out of |1> to |3>
    let dim = 4;
    let h = Hamiltonian::constant(sigma_x(dim, 2, 1, 3.0)).unwrap();
    let terms = [
        LindbladTerm::new("herald", 4.0, Operator::transition(dim, 0, 1).unwrap()).unwrap(),
        LindbladTerm::new("loss", 1.0, Operator::transition(dim, 3, 1).unwrap()).unwrap(),
    ];
    let grid = TimeGrid::uniform(0.0, 2.0, 5).unwrap();
    let opts = SolverOptions::with_tol(1e-10);
    let master = evolve_master(&DensityMatrix::basis(dim, 2).unwrap(), &h, &terms, &grid, &opts).unwrap();
    let her = evolve_heralded(&StateVector::basis(dim, 2).unwrap(), &h, &terms, &["herald"], &grid, &opts).unwrap();
    for (m, hd) in master.states.iter().zip(&her.heralded) {
        assert!((m.population(0) - hd.population(0)).abs() < 1e-8);
    }
}

#[test]
fn halving_max_step_changes_little() {
    let dim = 3;
    let h = Hamiltonian::constant(sigma_x(dim, 0, 1, 5.0).add(&sigma_x(dim, 1, 2, 2.0)).unwrap()).unwrap();
    let terms = [decay(dim, 2, 0, 3.0), decay(dim, 1, 0, 0.5)];
    let grid = TimeGrid::new(vec![0.0, 2.0]).unwrap();
    let tol = 1e-8;
    let run = |max_step| {
        let opts = SolverOptions { tol, max_step: Some(max_step), record_steps: false };
        evolve_master(&DensityMatrix::basis(dim, 0).unwrap(), &h, &terms, &grid, &opts)
            .unwrap()
            .final_state()
            .populations()
    };
    let a = run(0.02);
    let b = run(0.01);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < tol);
    }
}

#[test]
fn square_pulses_switch_on_breakpoints() {
    // pi pulse during [0, t1], idle afterwards: population must stay in |1>
    let omega = 2.0;
    let t1 = PI / (2.0 * omega);
    let mut h = Hamiltonian::zero(2);
    h.push(sigma_x(2, 0, 1, 1.0), Envelope::Square { amplitude: omega, start: 0.0, end: t1 }).unwrap();
    let grid = TimeGrid::new(vec![0.0, 3.0 * t1]).unwrap();
    let traj =
        evolve_master(&DensityMatrix::basis(2, 0).unwrap(), &h, &[], &grid, &SolverOptions::with_tol(1e-10)).unwrap();
    assert!((traj.final_state().population(1) - 1.0).abs() < 1e-8);
}

#[test]
fn step_populations_are_recorded() {
    let terms = [decay(2, 1, 0, 1.0)];
    let grid = TimeGrid::new(vec![0.0, 2.0]).unwrap();
    let traj = evolve_master(
        &DensityMatrix::basis(2, 1).unwrap(),
        &Hamiltonian::zero(2),
        &terms,
        &grid,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(traj.states.len(), 2);
    assert!(traj.step_times.len() > 2);
    assert_eq!(traj.step_times.len(), traj.step_populations.len());
    assert!(traj.step_times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn input_errors() {
    let rho = DensityMatrix::basis(2, 0).unwrap();
    let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
    assert!(matches!(
        evolve_master(&rho, &Hamiltonian::zero(3), &[], &grid, &SolverOptions::default()),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        evolve_master(&rho, &Hamiltonian::zero(2), &[], &grid, &SolverOptions::with_tol(1e-3)),
        Err(Error::InvalidTolerance(_))
    ));
    assert!(matches!(
        evolve_master(&rho, &Hamiltonian::zero(2), &[decay(3, 1, 0, 1.0)], &grid, &SolverOptions::default()),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
    let unnormalised = StateVector::new(vec![c(0.5), c(0.0)]).unwrap();
    assert!(evolve_no_jump(&unnormalised, &Hamiltonian::zero(2), &[], &grid, &SolverOptions::default()).is_err());
}

#[test]
fn stiff_system_reports_failing_time() {
    let terms = [decay(2, 1, 0, 1e9)];
    let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
    let mut opts = SolverOptions::default();
    opts.record_steps = false;
    // the explicit scheme needs ~1e9 steps; the budget runs out first
    let r = evolve_master(&DensityMatrix::basis(2, 1).unwrap(), &Hamiltonian::zero(2), &terms, &grid, &opts);
    match r {
        Err(Error::TooManySteps { time, .. }) | Err(Error::StepSizeUnderflow { time }) => {
            assert!((0.0..1.0).contains(&time))
        }
        other => panic!("expected a stiffness failure, got {other:?}"),
    }
}

fn random_system(
    dim: usize,
    couplings: &[(usize, usize, f64, f64)],
    decays: &[(usize, usize, f64)],
) -> (Hamiltonian, Vec<LindbladTerm>) {
    let mut trip = Vec::new();
    for &(a, b, re, im) in couplings {
        let (a, b) = (a % dim, b % dim);
        if a == b {
            trip.push((a, a, c(re)));
        } else {
            trip.push((a, b, Complex64::new(re, im)));
            trip.push((b, a, Complex64::new(re, -im)));
        }
    }
    let h = Hamiltonian::constant(Operator::from_triplets(dim, trip).unwrap()).unwrap();
    let terms = decays.iter().map(|&(a, b, r)| decay(dim, a % dim, b % dim, r)).collect();
    (h, terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_and_positivity_are_preserved(
        dim in 2usize..5,
        couplings in prop::collection::vec((0usize..5, 0usize..5, -3.0f64..3.0, -3.0f64..3.0), 1..6),
        decays in prop::collection::vec((0usize..5, 0usize..5, 0.0f64..4.0), 0..4),
    ) {
        let (h, terms) = random_system(dim, &couplings, &decays);
        let tol = 1e-8;
        let grid = TimeGrid::uniform(0.0, 2.0, 9).unwrap();
        let traj = evolve_master(&DensityMatrix::basis(dim, 0).unwrap(), &h, &terms, &grid, &SolverOptions::with_tol(tol)).unwrap();
        for s in &traj.states {
            let State::Mixed(r) = s else { unreachable!() };
            prop_assert!((r.trace() - 1.0).abs() <= 10.0 * tol);
            prop_assert!(r.min_eigenvalue() >= -1e-8);
            prop_assert!(r.hermiticity_defect() < 1e-10);
        }
    }

    #[test]
    fn no_jump_norm_never_increases(
        dim in 2usize..5,
        couplings in prop::collection::vec((0usize..5, 0usize..5, -3.0f64..3.0, -3.0f64..3.0), 1..6),
        decays in prop::collection::vec((0usize..5, 0usize..5, 0.0f64..4.0), 0..4),
    ) {
        let (h, terms) = random_system(dim, &couplings, &decays);
        let grid = TimeGrid::uniform(0.0, 2.0, 21).unwrap();
        let traj = evolve_no_jump(&StateVector::basis(dim, 0).unwrap(), &h, &terms, &grid, &SolverOptions::with_tol(1e-9)).unwrap();
        let norm = traj.observable("norm").unwrap();
        prop_assert!(norm.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        let total_jump: Vec<f64> = (0..norm.len())
            .map(|i| traj.observables.iter().filter(|(k, _)| k.starts_with("jump:")).map(|(_, v)| v[i]).sum())
            .collect();
        for (n, j) in norm.iter().zip(total_jump) {
            prop_assert!((n + j - 1.0).abs() < 1e-6);
        }
    }
}
