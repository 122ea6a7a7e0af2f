//! Lindblad master-equation and no-jump propagation.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::hamiltonian::{Envelope, Hamiltonian};
use super::integrator::{integrate, IntegrationStats, StepControl};
use super::operator::Operator;
use super::state::{DensityMatrix, State, StateVector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
// local error budget per step relative to the requested tolerance, so the
// accumulated global error stays below `tol`
const LOCAL_TOL_FACTOR: f64 = 0.05;

/// One jump operator `L` (already scaled by `sqrt(rate)`). Several terms may
/// share a channel label; their jump probabilities are reported together.
#[derive(Clone, Debug)]
pub struct LindbladTerm {
    pub channel: String,
    pub rate: f64,
    pub operator: Operator,
}

impl LindbladTerm {
    /// `sqrt(rate) * unit`
    pub fn new(channel: impl Into<String>, rate: f64, unit: Operator) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::param("rate", format!("{rate} must be finite and >= 0")));
        }
        Ok(Self { channel: channel.into(), rate, operator: unit.scale(Complex64::new(rate.sqrt(), 0.0)) })
    }

    pub fn from_operator(channel: impl Into<String>, operator: Operator) -> Self {
        Self { channel: channel.into(), rate: f64::NAN, operator }
    }
}

/// Strictly increasing output times; the first entry is the initial time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("times must be strictly increasing".into()));
        }
        Ok(Self(times))
    }

    pub fn uniform(t0: f64, t1: f64, points: usize) -> Result<Self> {
        if points < 2 || !(t1 > t0) {
            return Err(Error::InvalidGrid(format!(
                "need >= 2 points on a non-empty interval, got {points} on [{t0}, {t1}]"
            )));
        }
        let dt = (t1 - t0) / (points - 1) as f64;
        let mut v: Vec<f64> = (0..points).map(|i| t0 + dt * i as f64).collect();
        v[points - 1] = t1;
        Self::new(v)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn start(&self) -> f64 {
        self.0[0]
    }

    pub fn end(&self) -> f64 {
        *self.0.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_step: Option<f64>,
    /// Record diagonal populations after every accepted step.
    pub record_steps: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_step: None, record_steps: true }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn control(&self) -> Result<StepControl> {
        if !(1e-12..=1e-4).contains(&self.tol) {
            return Err(Error::InvalidTolerance(self.tol));
        }
        let mut c = StepControl::with_tolerance((self.tol * LOCAL_TOL_FACTOR).max(1e-14));
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::param("max_step", "must be positive"));
            }
            c.max_step = h;
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Named real series sampled on `times`.
    pub observables: BTreeMap<String, Vec<f64>>,
    pub step_times: Vec<f64>,
    pub step_populations: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(Vec::as_slice)
    }

    /// Adds `Re <op>` as a series on the stored grid.
    pub fn record_expectation(&mut self, name: &str, op: &Operator) -> Result<()> {
        let series =
            self.states.iter().map(|s| super::state::expectation(s, op).map(|v| v.re)).collect::<Result<Vec<_>>>()?;
        self.observables.insert(name.to_string(), series);
        Ok(())
    }
}

/// Precomputed generator pieces shared by all engines.
struct Generator {
    dim: usize,
    terms: Vec<(Operator, Envelope)>,
    /// `sum_k L_k^dagger L_k`
    decay: Operator,
    jumps: Vec<Jump>,
    /// Column range `[lo, hi)` of the diagonal block holding each index;
    /// entries outside these blocks stay exactly zero during evolution.
    span: Vec<(usize, usize)>,
}

struct Jump {
    op: Operator,
    rows: Vec<usize>,
    /// Per row, the column range covered by the blocks of its sources.
    cols: Vec<(usize, usize)>,
}

impl Generator {
    /// `linked` lists index pairs the initial state already connects.
    fn new(h: &Hamiltonian, lindblads: &[LindbladTerm], linked: &[(usize, usize)]) -> Result<Self> {
        let dim = h.dim();
        let mut decay = Operator::zeros(dim);
        let mut jumps = Vec::with_capacity(lindblads.len());
        for term in lindblads {
            term.operator.check_dim(dim)?;
            if term.operator.is_zero() {
                continue;
            }
            decay = decay.add(&term.operator.adjoint().matmul(&term.operator)?)?;
            let mut rows: Vec<usize> = term.operator.iter().map(|(r, _, _)| r).collect();
            rows.dedup();
            jumps.push(Jump { op: term.operator.clone(), rows, cols: Vec::new() });
        }
        let span = block_spans(dim, h, &decay, &jumps, linked);
        for jump in &mut jumps {
            jump.cols = jump
                .rows
                .iter()
                .map(|&r| {
                    jump.op.row(r).map(|(k, _)| span[k]).fold((dim, 0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
                })
                .collect();
        }
        Ok(Self {
            dim,
            span,
            terms: h.terms().iter().map(|t| (t.operator.clone(), t.envelope.clone())).collect(),
            decay,
            jumps,
        })
    }

    fn coefficients(&self, t: f64, seg: (f64, f64)) -> Vec<f64> {
        self.terms.iter().map(|(_, e)| e.value_on_segment(t, seg.0, seg.1)).collect()
    }

    /// `out = H_eff x` for a dense row-major block (`cols` columns),
    /// `H_eff = H(t) - i/2 sum L^dagger L`.
    fn heff_mul(&self, coeffs: &[f64], x: &[Complex64], cols: usize, out: &mut [Complex64]) {
        let dense = cols == self.dim;
        if dense {
            for (r, &(lo, hi)) in self.span.iter().enumerate() {
                out[r * cols + lo..r * cols + hi].iter_mut().for_each(|v| *v = ZERO);
            }
        } else {
            out.iter_mut().for_each(|v| *v = ZERO);
        }
        let mut acc = |op: &Operator, s: Complex64| {
            for (r, c, v) in op.iter() {
                let a = v * s;
                let (lo, hi) = if dense { self.span[c] } else { (0, cols) };
                let src = &x[c * cols + lo..c * cols + hi];
                let dst = &mut out[r * cols + lo..r * cols + hi];
                for (d, sv) in dst.iter_mut().zip(src) {
                    *d += a * sv;
                }
            }
        };
        for ((op, _), &c) in self.terms.iter().zip(coeffs) {
            if c != 0.0 {
                acc(op, Complex64::new(c, 0.0));
            }
        }
        acc(&self.decay, Complex64::new(0.0, -0.5));
    }

    /// `d rho = -i (H_eff rho - rho H_eff^dagger)` given `a = H_eff rho`.
    /// Only block entries are written; the integrator's stage buffers start
    /// at zero and stay zero elsewhere.
    fn commutator_from(&self, a: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        for r in 0..n {
            let (lo, hi) = self.span[r];
            for c in lo..hi {
                out[r * n + c] = -I * a[r * n + c] + I * a[c * n + r].conj();
            }
        }
    }

    /// `out += L x L^dagger` for each jump in `which`.
    fn add_jumps(&self, which: &[usize], x: &[Complex64], scratch: &mut Vec<Complex64>, out: &mut [Complex64]) {
        let n = self.dim;
        for &j in which {
            let jump = &self.jumps[j];
            if jump.op.nnz() <= n {
                // few non-zeros: sum L[r1][k1] x[k1][k2] conj(L[r2][k2]) directly
                for &r1 in &jump.rows {
                    for &r2 in &jump.rows {
                        let mut v = ZERO;
                        for (k1, l1) in jump.op.row(r1) {
                            let (lo, hi) = self.span[k1];
                            for (k2, l2) in jump.op.row(r2) {
                                if k2 >= lo && k2 < hi {
                                    v += l1 * x[k1 * n + k2] * l2.conj();
                                }
                            }
                        }
                        out[r1 * n + r2] += v;
                    }
                }
                continue;
            }
            // B = L x restricted to the non-zero rows of L and, per row, to
            // the columns its sources can populate
            if scratch.len() < jump.rows.len() * n {
                scratch.resize(jump.rows.len() * n, ZERO);
            }
            for (bi, &r) in jump.rows.iter().enumerate() {
                let (lo, hi) = jump.cols[bi];
                let dst = &mut scratch[bi * n + lo..bi * n + hi];
                dst.iter_mut().for_each(|v| *v = ZERO);
                for (k, l) in jump.op.row(r) {
                    let (klo, khi) = self.span[k];
                    let src = &x[k * n + klo..k * n + khi];
                    for (d, s) in dst[klo - lo..khi - lo].iter_mut().zip(src) {
                        *d += l * s;
                    }
                }
            }
            // (B L^dagger)[r1][r2] = sum_k B[r1][k] conj(L[r2][k])
            for (bi, &r1) in jump.rows.iter().enumerate() {
                let (lo, hi) = jump.cols[bi];
                let brow = &scratch[bi * n..(bi + 1) * n];
                for &r2 in &jump.rows {
                    let v: Complex64 =
                        jump.op.row(r2).filter(|&(k, _)| k >= lo && k < hi).map(|(k, l)| brow[k] * l.conj()).sum();
                    out[r1 * n + r2] += v;
                }
            }
        }
    }
}

fn targets_for(grid: &TimeGrid, h: &Hamiltonian) -> (Vec<f64>, Vec<Option<usize>>) {
    let (t0, t1) = (grid.start(), grid.end());
    let mut all: Vec<(f64, Option<usize>)> =
        grid.times().iter().enumerate().skip(1).map(|(i, &t)| (t, Some(i))).collect();
    for b in h.breakpoints() {
        if b > t0 && b < t1 && !grid.times().contains(&b) {
            all.push((b, None));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.into_iter().unzip()
}

/// Integrates `d rho/dt = -i[H, rho] + sum_i (L rho L^dagger - 1/2 {L^dagger L, rho})`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    hamiltonian: &Hamiltonian,
    lindblads: &[LindbladTerm],
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<Trajectory> {
    rho0.validate()?;
    hamiltonian_matches(hamiltonian, rho0.dim())?;
    let control = options.control()?;
    let linked: Vec<(usize, usize)> = rho0
        .matrix()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != ZERO)
        .map(|(i, _)| (i % rho0.dim(), i / rho0.dim()))
        .collect();
    let gen = Generator::new(hamiltonian, lindblads, &linked)?;
    let n = gen.dim;
    let all_jumps: Vec<usize> = (0..gen.jumps.len()).collect();

    let mut a = vec![ZERO; n * n];
    let mut scratch = Vec::new();
    let mut rhs = |t: f64, seg: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
        let coeffs = gen.coefficients(t, seg);
        gen.heff_mul(&coeffs, y, n, &mut a);
        gen.commutator_from(&a, dy);
        gen.add_jumps(&all_jumps, y, &mut scratch, dy);
    };

    let mut traj =
        Trajectory { times: grid.times().to_vec(), states: vec![State::Mixed(rho0.clone())], ..Default::default() };
    let diag = |y: &[Complex64]| (0..n).map(|i| y[i * n + i].re).collect::<Vec<_>>();
    if options.record_steps {
        traj.step_times.push(grid.start());
        traj.step_populations.push(rho0.populations());
    }
    let (targets, outputs) = targets_for(grid, hamiltonian);
    let mut y = rho0.to_row_major();
    let mut stored = Vec::new();
    let mut step_t = Vec::new();
    let mut step_p = Vec::new();
    let stats = integrate(
        &mut rhs,
        &mut y,
        grid.start(),
        &targets,
        &control,
        |t, y| {
            if options.record_steps {
                step_t.push(t);
                step_p.push(diag(y));
            }
        },
        |i, y| {
            if outputs[i].is_some() {
                stored.push(DensityMatrix::from_row_major(n, y));
            }
        },
    )?;
    traj.states.extend(stored.into_iter().map(State::Mixed));
    traj.step_times.extend(step_t);
    traj.step_populations.extend(step_p);
    traj.stats = stats;
    Ok(traj)
}

/// Propagates under `H_NJ = H - (i/2) sum L^dagger L` without renormalising.
/// Accumulated jump probabilities `int <L^dagger L> dt` are reported per
/// channel as observables named `jump:<channel>`, alongside `norm` (squared).
pub fn evolve_no_jump(
    psi0: &StateVector,
    hamiltonian: &Hamiltonian,
    lindblads: &[LindbladTerm],
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<Trajectory> {
    check_normalized(psi0)?;
    hamiltonian_matches(hamiltonian, psi0.dim())?;
    let control = options.control()?;
    let gen = Generator::new(hamiltonian, lindblads, &support_chain(psi0))?;
    let n = gen.dim;
    let nj = gen.jumps.len();

    let mut tmp = vec![ZERO; n];
    let mut rhs = |t: f64, seg: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
        let coeffs = gen.coefficients(t, seg);
        gen.heff_mul(&coeffs, &y[..n], 1, &mut dy[..n]);
        for v in &mut dy[..n] {
            *v *= -I;
        }
        for (j, jump) in gen.jumps.iter().enumerate() {
            jump.op.mul_vec_into(&y[..n], &mut tmp);
            let p: f64 = jump.rows.iter().map(|&r| tmp[r].norm_sqr()).sum();
            dy[n + j] = Complex64::new(p, 0.0);
        }
    };

    let mut y: Vec<Complex64> = psi0.amplitudes().to_vec();
    y.resize(n + nj, ZERO);
    let (targets, outputs) = targets_for(grid, hamiltonian);
    let mut samples = vec![y.clone()];
    let mut step_t = vec![grid.start()];
    let mut step_p = vec![psi0.populations()];
    let stats = integrate(
        &mut rhs,
        &mut y,
        grid.start(),
        &targets,
        &control,
        |t, y| {
            if options.record_steps {
                step_t.push(t);
                step_p.push(y[..n].iter().map(|a| a.norm_sqr()).collect());
            }
        },
        |i, y| {
            if outputs[i].is_some() {
                samples.push(y.to_vec());
            }
        },
    )?;

    let mut traj = Trajectory { times: grid.times().to_vec(), stats, ..Default::default() };
    if options.record_steps {
        traj.step_times = step_t;
        traj.step_populations = step_p;
    }
    let channels: Vec<&str> = lindblads.iter().filter(|l| !l.operator.is_zero()).map(|l| l.channel.as_str()).collect();
    for s in &samples {
        let psi = StateVector::from_amplitudes_unchecked(s[..n].to_vec())?;
        traj.observables.entry("norm".into()).or_default().push(psi.norm_sqr());
        let mut by_channel: BTreeMap<&str, f64> = BTreeMap::new();
        for (j, ch) in channels.iter().enumerate() {
            *by_channel.entry(ch).or_default() += s[n + j].re;
        }
        for (ch, p) in by_channel {
            traj.observables.entry(format!("jump:{ch}")).or_default().push(p);
        }
        traj.states.push(State::Pure(psi));
    }
    Ok(traj)
}

/// Result of [`evolve_heralded`].
#[derive(Clone, Debug)]
pub struct HeraldedTrajectory {
    /// No-jump branch.
    pub no_jump: Trajectory,
    /// Unnormalised state conditioned on exactly one herald jump and no
    /// other jump, sampled on the same grid.
    pub heralded: Vec<DensityMatrix>,
}

/// No-jump evolution plus the branch that has undergone exactly one jump on
/// the `herald` channels:
/// `d rho_h/dt = -i(H_NJ rho_h - rho_h H_NJ^dagger) + sum_h L_h psi psi^dagger L_h^dagger`.
/// Terms whose channel is listed in `herald_channels` feed `rho_h`; all other
/// jumps remove weight from both branches.
pub fn evolve_heralded(
    psi0: &StateVector,
    hamiltonian: &Hamiltonian,
    lindblads: &[LindbladTerm],
    herald_channels: &[&str],
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<HeraldedTrajectory> {
    check_normalized(psi0)?;
    hamiltonian_matches(hamiltonian, psi0.dim())?;
    let control = options.control()?;
    let active: Vec<&LindbladTerm> = lindblads.iter().filter(|l| !l.operator.is_zero()).collect();
    let gen = Generator::new(hamiltonian, lindblads, &support_chain(psi0))?;
    let n = gen.dim;
    let herald: Vec<usize> = active
        .iter()
        .enumerate()
        .filter(|(_, l)| herald_channels.contains(&l.channel.as_str()))
        .map(|(j, _)| j)
        .collect();

    let mut a = vec![ZERO; n * n];
    let mut outer = vec![ZERO; n * n];
    let mut scratch = Vec::new();
    let mut rhs = |t: f64, seg: (f64, f64), y: &[Complex64], dy: &mut [Complex64]| {
        let coeffs = gen.coefficients(t, seg);
        let (psi, rho) = y.split_at(n);
        let (dpsi, drho) = dy.split_at_mut(n);
        gen.heff_mul(&coeffs, psi, 1, dpsi);
        for v in dpsi.iter_mut() {
            *v *= -I;
        }
        gen.heff_mul(&coeffs, rho, n, &mut a);
        gen.commutator_from(&a, drho);
        for r in 0..n {
            let (lo, hi) = gen.span[r];
            for c in lo..hi {
                outer[r * n + c] = psi[r] * psi[c].conj();
            }
        }
        gen.add_jumps(&herald, &outer, &mut scratch, drho);
    };

    let mut y: Vec<Complex64> = psi0.amplitudes().to_vec();
    y.resize(n + n * n, ZERO);
    let (targets, outputs) = targets_for(grid, hamiltonian);
    let mut samples = vec![y.clone()];
    let stats = integrate(
        &mut rhs,
        &mut y,
        grid.start(),
        &targets,
        &control,
        |_, _| {},
        |i, y| {
            if outputs[i].is_some() {
                samples.push(y.to_vec());
            }
        },
    )?;
    let mut no_jump = Trajectory { times: grid.times().to_vec(), stats, ..Default::default() };
    let mut heralded = Vec::with_capacity(samples.len());
    for s in samples {
        let psi = StateVector::from_amplitudes_unchecked(s[..n].to_vec())?;
        no_jump.observables.entry("norm".into()).or_default().push(psi.norm_sqr());
        no_jump.states.push(State::Pure(psi));
        heralded.push(DensityMatrix::from_row_major(n, &s[n..]));
    }
    Ok(HeraldedTrajectory { no_jump, heralded })
}

/// Consecutive pairs of the support of `psi`, linking it into one block.
fn support_chain(psi: &StateVector) -> Vec<(usize, usize)> {
    let support: Vec<usize> = (0..psi.dim()).filter(|&i| psi.amplitudes()[i] != ZERO).collect();
    support.windows(2).map(|w| (w[0], w[1])).collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
    ra != rb
}

/// Blocks of indices connected by the Hamiltonian, the decay part of
/// `H_eff` or the initial state, merged until every jump maps each source
/// block into a single target block. The density matrix then stays block
/// diagonal. Each index gets the smallest contiguous range covering its block.
fn block_spans(
    dim: usize,
    h: &Hamiltonian,
    decay: &Operator,
    jumps: &[Jump],
    linked: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    let mut parent: Vec<usize> = (0..dim).collect();
    for t in h.terms() {
        for (r, c, _) in t.operator.iter() {
            union(&mut parent, r, c);
        }
    }
    for (r, c, _) in decay.iter() {
        union(&mut parent, r, c);
    }
    for &(a, b) in linked {
        union(&mut parent, a, b);
    }
    loop {
        let mut changed = false;
        for jump in jumps {
            let mut target: BTreeMap<usize, usize> = BTreeMap::new();
            for (r, c, _) in jump.op.iter() {
                let src = find(&mut parent, c);
                match target.get(&src) {
                    Some(&t) => changed |= union(&mut parent, t, r),
                    None => {
                        target.insert(src, r);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut range: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for i in 0..dim {
        let root = find(&mut parent, i);
        let e = range.entry(root).or_insert((i, i + 1));
        e.0 = e.0.min(i);
        e.1 = e.1.max(i + 1);
    }
    (0..dim).map(|i| range[&find(&mut parent, i)]).collect()
}

fn hamiltonian_matches(h: &Hamiltonian, dim: usize) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
    }
    Ok(())
}

fn check_normalized(psi: &StateVector) -> Result<()> {
    let n2 = psi.norm_sqr();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("initial state must be normalised, squared norm is {n2}")));
    }
    Ok(())
}
