//! Master-equation model over every hyperfine and Zeeman sublevel of the
//! four fine-structure levels that carry the diamond roles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{hyperfine_amplitude, AtomSpec, ZeemanState};
use crate::diamond::{
    g_for_cooperativity, initial_guess, params_from, pulse_dimensions, run_cycle, simulate_cycle, CavitySpace,
    CycleModel, CycleOptions, CycleResult, Detunings, DiamondParams, Sector,
};
use crate::error::{Error, Result};
use crate::optimize::{minimize, Dimension, OptimizerSettings};
use crate::par::{map_indexed, Execution};
use crate::quantum::{Envelope, Hamiltonian, LindbladTerm, Operator};

/// Probe groups reported by [`FullModel::simulate`] as `pop_<name>`.
pub const FULL_PROBES: [&str; 6] = ["0", "1", "e1", "e2", "e3", "dump"];

const DUMP_LABEL: &str = "dump";
const DECAY_CHANNEL: &str = "decay";

/// Intensity fractions of the three spherical components.
///
/// For a π-intended field the impurity is a transverse component
/// `e^{i phase} (cos azimuth x + sin azimuth y)`, so `phase = 0` is a
/// linearly polarised field tilted away from the quantisation axis. For a
/// σ-intended field the other components carry `e^{i phase}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationMix {
    pub pi: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub azimuth: f64,
}

impl PolarizationMix {
    pub fn pure(q: i32) -> Self {
        Self::with_purity(q, 1.0).expect("purity 1 is valid")
    }

    /// Fraction `purity` in component `q`; the rest split equally between
    /// the other two.
    pub fn with_purity(q: i32, purity: f64) -> Result<Self> {
        if !(purity > 0.0 && purity <= 1.0) {
            return Err(Error::param("purity", format!("{purity} not in (0, 1]")));
        }
        if q.abs() > 1 {
            return Err(Error::param("q", "polarisation index must be -1, 0 or 1"));
        }
        let rest = (1.0 - purity) / 2.0;
        let mut f = [rest; 3];
        f[(q + 1) as usize] = purity;
        Ok(Self { sigma_minus: f[0], pi: f[1], sigma_plus: f[2], phase: 0.0, azimuth: 0.0 })
    }

    pub fn fraction(&self, q: i32) -> f64 {
        match q {
            -1 => self.sigma_minus,
            0 => self.pi,
            1 => self.sigma_plus,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.pi, self.sigma_plus, self.sigma_minus];
        if f.iter().any(|&x| !(x >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::param("polarization", format!("fractions {f:?} must be >= 0 and sum to 1")));
        }
        if !(self.phase.is_finite() && self.azimuth.is_finite()) {
            return Err(Error::param("polarization", "phase and azimuth must be finite"));
        }
        Ok(())
    }

    /// Coefficient of the `Δm = q` coupling when `intended` is the target.
    /// A transverse unit vector at azimuth `χ` drives `Δm = ±1` with
    /// `∓ e^{∓iχ} / √2`.
    fn amplitude(&self, q: i32, intended: i32) -> Complex64 {
        let a = self.fraction(q).sqrt();
        if q == intended {
            return Complex64::new(a, 0.0);
        }
        let extra = if intended == 0 {
            let s = f64::from(q);
            Complex64::from_polar(-s, -s * self.azimuth)
        } else {
            Complex64::new(1.0, 0.0)
        };
        extra * Complex64::from_polar(a, self.phase)
    }
}

/// Amplitude (γ units), polarisation and detuning of one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveField {
    pub amplitude: f64,
    pub polarization: PolarizationMix,
    #[serde(default)]
    pub detuning: f64,
}

/// The three laser fields, the cavity mode (`cavity.amplitude` is `g`) and
/// the pulse windows `Ω1: [0, t1]`, `Ω2: [t1, t2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega1: DriveField,
    pub omega_e: DriveField,
    pub omega2: DriveField,
    pub cavity: DriveField,
    pub t1: f64,
    pub t2: f64,
}

impl DriveConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in
            [("omega1", &self.omega1), ("omega_e", &self.omega_e), ("omega2", &self.omega2), ("cavity", &self.cavity)]
        {
            if !(d.amplitude >= 0.0 && d.amplitude.is_finite()) {
                return Err(Error::param("amplitude", format!("{name}: {} must be finite and >= 0", d.amplitude)));
            }
            if !d.detuning.is_finite() {
                return Err(Error::param("detuning", format!("{name}: not finite")));
            }
            d.polarization.validate()?;
        }
        if !(self.t1 > 0.0 && self.t2 > self.t1 && self.t2.is_finite()) {
            return Err(Error::param("t1", format!("need 0 < t1 < t2, got t1={} t2={}", self.t1, self.t2)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Spontaneous decay into modelled sublevels stays in the model before
    /// the photon is collected.
    #[default]
    Retain,
    /// Every spontaneous decay goes to the dump level.
    StrictDump,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub decay: DecayMode,
    /// Keep only the five role couplings: off-resonant partners are
    /// effectively detuned to infinity.
    pub isolate_roles: bool,
}

#[derive(Clone, Debug)]
pub struct FullModel {
    pub sublevels: Vec<ZeemanState>,
    pub space: CavitySpace,
    pub hamiltonian: Hamiltonian,
    pub lindblads: Vec<LindbladTerm>,
    /// Atomic indices of the roles `0, 1, e1, e2, e3`.
    pub roles: [usize; 5],
    pub dump: usize,
    pub kappa_f: f64,
    pub kappa_l: f64,
    pub t2: f64,
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn sublevel_label(s: &ZeemanState) -> String {
    format!("{} F={} m={}", s.level, s.f, s.m)
}

impl FullModel {
    /// Assembles the Hamiltonian and jump operators. Every energy and rate
    /// is in units of the atom's reference decay rate `γ`.
    pub fn new(
        atom: &AtomSpec,
        drives: &DriveConfig,
        kappa_f: f64,
        kappa_l: f64,
        options: &ModelOptions,
        n_max: usize,
    ) -> Result<Self> {
        atom.validate()?;
        drives.validate()?;
        if !(kappa_f >= 0.0 && kappa_l >= 0.0 && kappa_f + kappa_l > 0.0) {
            return Err(Error::param("kappa_f", "cavity rates must be >= 0 with a positive sum"));
        }
        let role: Vec<ZeemanState> = super::ROLES.iter().map(|r| atom.role(r)).collect::<Result<_>>()?;
        let (r0, r1, e1, e2, e3) = (&role[0], &role[1], &role[2], &role[3], &role[4]);

        // fine levels in data-file order
        let used: Vec<&str> =
            atom.levels.iter().map(|l| l.name.as_str()).filter(|n| role.iter().any(|r| r.level == *n)).collect();
        let mut sublevels = Vec::new();
        for &name in &used {
            for (f, _) in atom.hyperfine(name)? {
                let twice_f = (2.0 * f).round() as i64;
                for k in 0..=twice_f {
                    sublevels.push(ZeemanState::new(name, f, -f + k as f64)?);
                }
            }
        }
        let find = |s: &ZeemanState| {
            sublevels
                .iter()
                .position(|x| x.level == s.level && (x.f - s.f).abs() < 1e-9 && (x.m - s.m).abs() < 1e-9)
                .ok_or_else(|| Error::AtomicData(format!("role state {} not in the model", sublevel_label(s))))
        };
        let roles = [find(r0)?, find(r1)?, find(e1)?, find(e2)?, find(e3)?];
        let mut labels: Vec<String> = sublevels.iter().map(sublevel_label).collect();
        labels.push(DUMP_LABEL.to_string());
        let dump = labels.len() - 1;
        let space = CavitySpace::new(labels, n_max)?;

        // rotating frame: each role level sits at its generic-model energy,
        // hyperfine partners are offset by their splitting
        let gamma_mhz = atom.reference_gamma_2pi_mhz();
        let (d1, de, d2, dc) =
            (drives.omega1.detuning, drives.omega_e.detuning, drives.omega2.detuning, drives.cavity.detuning);
        let frame = [(r0, 0.0), (e1, -d1), (e2, -d1 - de), (e3, -d2)];
        let mut diag = Vec::new();
        for (i, s) in sublevels.iter().enumerate() {
            let (reference, offset) = frame
                .iter()
                .find(|(r, _)| r.level == s.level)
                .map(|&(r, o)| (r, o))
                .expect("every modelled level holds a role");
            let e =
                (atom.shift_mhz(&s.level, s.f)? - atom.shift_mhz(&reference.level, reference.f)?) / gamma_mhz + offset;
            if e != 0.0 {
                diag.push((i, i, c(e)));
            }
        }
        let photon_energy = (-d1 - de) - (-d2) - dc;

        // couplings of one field normalised to its role transition
        let field_entries = |role_lower: &ZeemanState,
                             role_upper: &ZeemanState,
                             field: &DriveField|
         -> Result<Vec<(usize, usize, Complex64)>> {
            let intended = (role_upper.m - role_lower.m).round() as i32;
            let la = atom.level(&role_lower.level)?;
            let lb = atom.level(&role_upper.level)?;
            let i = atom.nuclear_spin;
            let amp =
                |a: &ZeemanState, b: &ZeemanState, q: i32| hyperfine_amplitude(la.j, a.f, a.m, lb.j, b.f, b.m, i, q);
            let reference = amp(role_lower, role_upper, intended);
            if reference == 0.0 {
                return Err(Error::AtomicData(format!(
                    "role transition {} -> {} is dipole forbidden",
                    sublevel_label(role_lower),
                    sublevel_label(role_upper)
                )));
            }
            let mut out = Vec::new();
            if options.isolate_roles {
                let v = field.polarization.amplitude(intended, intended) * field.amplitude;
                out.push((find(role_upper)?, find(role_lower)?, v));
                return Ok(out);
            }
            for (ia, a) in sublevels.iter().enumerate().filter(|(_, s)| s.level == role_lower.level) {
                for (ib, b) in sublevels.iter().enumerate().filter(|(_, s)| s.level == role_upper.level) {
                    let q = (b.m - a.m).round() as i32;
                    if q.abs() > 1 {
                        continue;
                    }
                    let d = amp(a, b, q);
                    let weight = field.polarization.amplitude(q, intended);
                    if d != 0.0 && weight != c(0.0) {
                        out.push((ib, ia, weight * (field.amplitude * d / reference)));
                    }
                }
            }
            Ok(out)
        };
        let hermitian = |entries: &[(usize, usize, Complex64)]| -> Result<Operator> {
            let mut all = entries.to_vec();
            all.extend(entries.iter().map(|&(r, col, v)| (col, r, v.conj())));
            space.atomic_operator(&all)
        };

        let omega1 = field_entries(r0, e1, &drives.omega1)?;
        let omega_e = field_entries(e1, e2, &drives.omega_e)?;
        let omega2 = field_entries(r0, e3, &drives.omega2)?;
        // the cavity photon is created on e2 -> e3, so e3 plays the lower role
        let cavity: Vec<_> = field_entries(e3, e2, &drives.cavity)?
            .into_iter()
            .map(|(upper, lower, g)| (lower, upper, g.conj()))
            .collect();

        let mut h = Hamiltonian::zero(space.dim());
        let static_part = space
            .atomic_operator(&diag)?
            .add(&space.photon_energy(photon_energy)?)?
            .add(&hermitian(&omega_e)?)?
            .add(&space.cavity_coupling(&cavity)?)?;
        h.push(static_part, Envelope::Constant(1.0))?;
        h.push(hermitian(&omega1)?, Envelope::Square { amplitude: 1.0, start: 0.0, end: drives.t1 })?;
        h.push(hermitian(&omega2)?, Envelope::Square { amplitude: 1.0, start: drives.t1, end: drives.t2 })?;

        let lindblads = decay_terms(atom, &sublevels, &space, dump, options.decay)?
            .into_iter()
            .chain(space.cavity_terms(kappa_f, kappa_l)?)
            .collect();

        Ok(Self { sublevels, space, hamiltonian: h, lindblads, roles, dump, kappa_f, kappa_l, t2: drives.t2 })
    }

    /// One cycle from the role `|0>` with an empty cavity.
    pub fn simulate(&self, options: &CycleOptions) -> Result<CycleResult> {
        if !(options.settle >= 0.0 && options.settle.is_finite()) {
            return Err(Error::param("settle", "must be finite and >= 0"));
        }
        if options.n_max != self.space.n_max() {
            return Err(Error::param("n_max", "model was built for a different photon truncation"));
        }
        let mut probes: Vec<(String, Vec<usize>)> =
            FULL_PROBES[..5].iter().zip(self.roles).map(|(n, i)| (n.to_string(), vec![i])).collect();
        probes.push((DUMP_LABEL.to_string(), vec![self.dump]));
        let model = CycleModel {
            space: &self.space,
            hamiltonian: &self.hamiltonian,
            lindblads: &self.lindblads,
            ground: self.roles[0],
            kappa_f: self.kappa_f,
            kappa_l: self.kappa_l,
            probes: &probes,
        };
        run_cycle(&model, self.t2 + options.settle, options)
    }
}

/// Spontaneous emission. Untagged decays into modelled levels keep their
/// hyperfine structure, one operator per `(F_upper, F_lower, q)`; decays
/// after the herald, into unmodelled levels, or in strict-dump mode go to
/// the dump level through one operator per upper sublevel.
fn decay_terms(
    atom: &AtomSpec,
    sublevels: &[ZeemanState],
    space: &CavitySpace,
    dump: usize,
    mode: DecayMode,
) -> Result<Vec<LindbladTerm>> {
    let mut out = Vec::new();
    let modelled = |name: &str| sublevels.iter().any(|s| s.level == name);
    for upper in atom.levels.iter().filter(|l| modelled(&l.name)) {
        let gamma = atom.gamma(&upper.name);
        if gamma == 0.0 {
            continue;
        }
        let channels = atom.branching.get(&upper.name).cloned().unwrap_or_default();
        let mut dumped = 0.0;
        for (lower, &br) in &channels {
            if br == 0.0 {
                continue;
            }
            if mode == DecayMode::StrictDump || !modelled(lower) {
                dumped += br;
                continue;
            }
            let ll = atom.level(lower)?;
            for (fb, _) in atom.hyperfine(&upper.name)? {
                for (fa, _) in atom.hyperfine(lower)? {
                    for q in -1..=1 {
                        let mut entries = Vec::new();
                        for (ib, b) in sublevels.iter().enumerate() {
                            if b.level != upper.name || (b.f - fb).abs() > 1e-9 {
                                continue;
                            }
                            let ma = b.m - q as f64;
                            let Some(ia) = sublevels
                                .iter()
                                .position(|a| a.level == *lower && (a.f - fa).abs() < 1e-9 && (a.m - ma).abs() < 1e-9)
                            else {
                                continue;
                            };
                            let d = hyperfine_amplitude(ll.j, fa, ma, upper.j, fb, b.m, atom.nuclear_spin, q);
                            if d != 0.0 {
                                entries.push((ia, ib, c(d)));
                            }
                        }
                        if !entries.is_empty() {
                            out.push(space.sector_decay_term(DECAY_CHANNEL, gamma * br, Sector::Untagged, &entries)?);
                        }
                    }
                }
            }
        }
        for (ib, _) in sublevels.iter().enumerate().filter(|(_, s)| s.level == upper.name) {
            if dumped > 0.0 {
                out.push(space.sector_decay_term(
                    DECAY_CHANNEL,
                    gamma * dumped,
                    Sector::Untagged,
                    &[(dump, ib, c(1.0))],
                )?);
            }
            out.push(space.sector_decay_term(DECAY_CHANNEL, gamma, Sector::Tagged, &[(dump, ib, c(1.0))])?);
        }
    }
    Ok(out)
}

/// Which pulse parameters the optimiser may change.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseTiming {
    /// Amplitudes, `t1` and the transfer-pulse area.
    #[default]
    Free,
    /// Square pulses on `[0, t1]` and `[t1, t2]`; only the three amplitudes move.
    Fixed { t1: f64, t2: f64 },
}

/// Settings for optimised fidelity versus cooperativity on the full model.
#[derive(Clone, Debug)]
pub struct PuritySettings {
    pub kappa: f64,
    pub fiber_fraction: f64,
    pub timing: PulseTiming,
    pub optimizer: OptimizerSettings,
    /// Optimise the five-level model with the same rates first and start
    /// the full-model search from its optimum.
    pub generic_start: Option<OptimizerSettings>,
    pub cycle: CycleOptions,
    pub model: ModelOptions,
}

impl Default for PuritySettings {
    fn default() -> Self {
        Self {
            kappa: 200.0,
            fiber_fraction: 0.5,
            timing: PulseTiming::Free,
            optimizer: OptimizerSettings::default(),
            generic_start: None,
            cycle: CycleOptions::default(),
            model: ModelOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PurityRow {
    /// `(Ω1, Ωe, Ω2, cavity)`
    pub purities: [f64; 4],
    pub cooperativity: f64,
    pub fidelity: f64,
    /// Best fidelity of the five-level warm start, if one ran.
    pub generic_fidelity: Option<f64>,
    pub drives: DriveConfig,
    pub evaluations: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
}

/// Drives for pulse parameters `x = (Ω1, Ωe, Ω2, t1, Ω2 (t2 - t1))` with
/// purities `(Ω1, Ωe, Ω2, cavity)`; intended polarisations follow the role
/// assignment.
pub fn uniform_drives(atom: &AtomSpec, purities: [f64; 4], x: &[f64], g: f64) -> Result<DriveConfig> {
    let role = |r: &str| atom.role(r);
    let (r0, e1, e2, e3) = (role("0")?, role("e1")?, role("e2")?, role("e3")?);
    let q = |lower: &ZeemanState, upper: &ZeemanState| (upper.m - lower.m).round() as i32;
    let field = |amplitude: f64, q: i32, purity: f64| -> Result<DriveField> {
        Ok(DriveField { amplitude, polarization: PolarizationMix::with_purity(q, purity)?, detuning: 0.0 })
    };
    Ok(DriveConfig {
        omega1: field(x[0], q(&r0, &e1), purities[0])?,
        omega_e: field(x[1], q(&e1, &e2), purities[1])?,
        omega2: field(x[2], q(&r0, &e3), purities[2])?,
        cavity: field(g, q(&e3, &e2), purities[3])?,
        t1: x[3],
        t2: x[3] + x[4] / x[2],
    })
}

/// Optimised fidelity at each cooperativity for one set of purities
/// `(Ω1, Ωe, Ω2, cavity)`. Rows are sorted by cooperativity.
pub fn purity_fidelity_curve(
    atom: &AtomSpec,
    purities: [f64; 4],
    c_values: &[f64],
    settings: &PuritySettings,
    exec: Execution,
) -> Result<Vec<PurityRow>> {
    if c_values.is_empty() {
        return Err(Error::param("cooperativities", "empty list"));
    }
    if let Some(c) = c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::param("cooperativities", format!("{c} is not positive")));
    }
    if !(settings.fiber_fraction > 0.0 && settings.fiber_fraction <= 1.0) {
        return Err(Error::param("fiber_fraction", "must lie in (0, 1]"));
    }
    if let PulseTiming::Fixed { t1, t2 } = settings.timing {
        if !(t1 > 0.0 && t2 > t1 && t2.is_finite()) {
            return Err(Error::param("timing", format!("need 0 < t1 < t2, got {t1}, {t2}")));
        }
    }
    for p in purities {
        PolarizationMix::with_purity(0, p)?;
    }
    let mut cs = c_values.to_vec();
    cs.sort_by(f64::total_cmp);
    let rows = map_indexed(exec, &cs, |_, &c| purity_row(atom, purities, c, settings));
    rows.into_iter().collect()
}

/// Search coordinates and the map to the full five-parameter vector.
fn search_space(c: f64, rates: [f64; 3], timing: PulseTiming) -> (Vec<Dimension>, Vec<f64>) {
    let [g1, g2, g3] = rates;
    let mut dims = pulse_dimensions(c, g1, g2, g3);
    let mut x0 = initial_guess(c, g1, g2, g3);
    if let PulseTiming::Fixed { .. } = timing {
        dims.truncate(3);
        x0.truncate(3);
    }
    (dims, x0)
}

fn expand(x: &[f64], timing: PulseTiming) -> Vec<f64> {
    match timing {
        PulseTiming::Free => x.to_vec(),
        PulseTiming::Fixed { t1, t2 } => vec![x[0], x[1], x[2], t1, x[2] * (t2 - t1)],
    }
}

fn fixed_t2(mut d: DriveConfig, timing: PulseTiming) -> DriveConfig {
    if let PulseTiming::Fixed { t2, .. } = timing {
        d.t2 = t2;
    }
    d
}

fn purity_row(atom: &AtomSpec, purities: [f64; 4], c: f64, s: &PuritySettings) -> Result<PurityRow> {
    let (e1, e2, e3) = (atom.role("e1")?, atom.role("e2")?, atom.role("e3")?);
    let rates = [atom.gamma(&e1.level), atom.gamma(&e2.level), atom.gamma(&e3.level)];
    let g = g_for_cooperativity(c, s.kappa, rates[1], rates[2])?;
    let (kf, kl) = (s.kappa * s.fiber_fraction, s.kappa * (1.0 - s.fiber_fraction));
    let (dims, mut x0) = search_space(c, rates, s.timing);

    let mut generic_fidelity = None;
    if let Some(opt) = &s.generic_start {
        let base = DiamondParams {
            g,
            kappa_f: kf,
            kappa_l: kl,
            gamma1: rates[0],
            gamma2: rates[1],
            gamma3: rates[2],
            omega1: 1.0,
            omega_e: 1.0,
            omega2: 1.0,
            t1: 1.0,
            t2: 2.0,
            detunings: Detunings::default(),
        };
        let objective = |x: &[f64]| {
            let mut p = params_from(&base, &expand(x, s.timing));
            if let PulseTiming::Fixed { t2, .. } = s.timing {
                p.t2 = t2;
            }
            simulate_cycle(&p, &s.cycle).map_or(f64::INFINITY, |r| 1.0 - r.fidelity)
        };
        let res = minimize(objective, &dims, Some(&x0), opt, Execution::Sequential)?;
        if res.value.is_finite() {
            generic_fidelity = Some(1.0 - res.value);
            x0 = res.x;
        }
    }

    let objective = |x: &[f64]| {
        let run = uniform_drives(atom, purities, &expand(x, s.timing), g)
            .map(|d| fixed_t2(d, s.timing))
            .and_then(|d| FullModel::new(atom, &d, kf, kl, &s.model, s.cycle.n_max))
            .and_then(|m| m.simulate(&s.cycle));
        match run {
            Ok(r) => 1.0 - r.fidelity,
            Err(e) => {
                log::debug!("objective failed at {x:?}: {e}");
                f64::INFINITY
            }
        }
    };
    let res = minimize(objective, &dims, Some(&x0), &s.optimizer, Execution::Sequential)?;
    if !res.value.is_finite() {
        return Err(Error::NonFinite("optimised error"));
    }
    if res.budget_exhausted {
        log::warn!("C = {c}: optimiser budget exhausted after {} evaluations", res.evaluations);
    }
    Ok(PurityRow {
        purities,
        cooperativity: c,
        fidelity: 1.0 - res.value,
        generic_fidelity,
        drives: fixed_t2(uniform_drives(atom, purities, &expand(&res.x, s.timing), g)?, s.timing),
        evaluations: res.evaluations,
        converged: res.converged,
        budget_exhausted: res.budget_exhausted,
    })
}
