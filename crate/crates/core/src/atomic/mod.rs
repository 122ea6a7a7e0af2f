//! Hyperfine and Zeeman structure of real alkali atoms: level data,
//! dipole couplings between sublevels and the full master-equation model.

mod model;
mod wigner;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use model::{
    purity_fidelity_curve, uniform_drives, DecayMode, DriveConfig, DriveField, FullModel, ModelOptions,
    PolarizationMix, PulseTiming, PurityRow, PuritySettings, FULL_PROBES,
};
pub use wigner::{clebsch_gordan, wigner3j, wigner6j};

pub const SCHEMA_VERSION: u32 = 1;

const CESIUM_JSON: &str = include_str!("../../data/cesium.json");
const CESIUM_STRETCHED_JSON: &str = include_str!("../../data/cesium_stretched.json");
const RUBIDIUM_JSON: &str = include_str!("../../data/rubidium.json");

/// A fine-structure level `n L_J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineLevel {
    pub name: String,
    pub n: u32,
    pub l: u32,
    pub j: f64,
}

/// One of the five diamond roles held by a Zeeman sublevel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleAssignment {
    pub role: String,
    pub level: String,
    pub f: f64,
    pub m: f64,
}

/// Atomic data file. Frequencies in MHz, decay rates as `Γ / 2π` in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub schema_version: u32,
    pub species: String,
    pub data_version: String,
    pub nuclear_spin: f64,
    pub levels: Vec<FineLevel>,
    /// Per level, `(F, shift from the fine-structure centroid)`.
    #[serde(rename = "splittings_MHz")]
    pub splittings_mhz: BTreeMap<String, Vec<(f64, f64)>>,
    #[serde(rename = "gammas_2pi_MHz")]
    pub gammas_2pi_mhz: BTreeMap<String, f64>,
    /// Level whose decay rate is the unit `γ`.
    pub reference_level: String,
    /// Fine-structure branching, upper level -> lower level -> fraction.
    pub branching: BTreeMap<String, BTreeMap<String, f64>>,
    pub roles: Vec<RoleAssignment>,
    /// Keyed `"<lower>-<upper>"`.
    pub wavelengths_nm: BTreeMap<String, f64>,
    /// Reduced dipole matrix elements `<J_upper||d||J_lower>` in `e a0`,
    /// keyed like the wavelengths.
    #[serde(default)]
    pub dipoles_ea0: BTreeMap<String, f64>,
    #[serde(default)]
    pub provenance: Vec<String>,
}

/// `|level, F, m_F>`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanState {
    pub level: String,
    pub f: f64,
    pub m: f64,
}

impl ZeemanState {
    pub fn new(level: impl Into<String>, f: f64, m: f64) -> Result<Self> {
        if m.abs() > f + 1e-12 || (f - m).fract().abs() > 1e-12 {
            return Err(Error::param("m_F", format!("|m_F| <= F violated or not in step with F: F={f} m={m}")));
        }
        Ok(Self { level: level.into(), f, m })
    }
}

fn data_error(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::AtomicData(format!("{field}: {reason}"))
}

/// Diamond roles in cycle order.
pub const ROLES: [&str; 5] = ["0", "1", "e1", "e2", "e3"];

impl AtomSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: AtomSpec = serde_json::from_str(text).map_err(|e| data_error("atomic data", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Clock-state cesium scheme.
    pub fn cesium() -> Self {
        Self::from_json(CESIUM_JSON).expect("bundled cesium data is valid")
    }

    /// Cesium scheme on stretched states.
    pub fn cesium_stretched() -> Self {
        Self::from_json(CESIUM_STRETCHED_JSON).expect("bundled cesium data is valid")
    }

    /// Rubidium scheme with the 1530 nm cavity transition.
    pub fn rubidium() -> Self {
        Self::from_json(RUBIDIUM_JSON).expect("bundled rubidium data is valid")
    }

    pub fn level(&self, name: &str) -> Result<&FineLevel> {
        self.levels.iter().find(|l| l.name == name).ok_or_else(|| data_error("levels", format!("unknown level {name}")))
    }

    /// Hyperfine `F` values of a level in ascending order.
    pub fn hyperfine(&self, name: &str) -> Result<Vec<(f64, f64)>> {
        let mut v = self
            .splittings_mhz
            .get(name)
            .cloned()
            .ok_or_else(|| data_error("splittings_MHz", format!("missing splitting data for {name}")))?;
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(v)
    }

    pub fn shift_mhz(&self, name: &str, f: f64) -> Result<f64> {
        self.hyperfine(name)?
            .iter()
            .find(|(ff, _)| (ff - f).abs() < 1e-9)
            .map(|&(_, s)| s)
            .ok_or_else(|| data_error("splittings_MHz", format!("{name} has no F = {f}")))
    }

    pub fn gamma_2pi_mhz(&self, name: &str) -> f64 {
        self.gammas_2pi_mhz.get(name).copied().unwrap_or(0.0)
    }

    /// The unit rate `γ / 2π` in MHz.
    pub fn reference_gamma_2pi_mhz(&self) -> f64 {
        self.gamma_2pi_mhz(&self.reference_level)
    }

    /// Decay rate of a level in units of `γ`.
    pub fn gamma(&self, name: &str) -> f64 {
        self.gamma_2pi_mhz(name) / self.reference_gamma_2pi_mhz()
    }

    pub fn role(&self, role: &str) -> Result<ZeemanState> {
        let r = self
            .roles
            .iter()
            .find(|r| r.role == role)
            .ok_or_else(|| data_error("roles", format!("role {role} not assigned")))?;
        ZeemanState::new(r.level.clone(), r.f, r.m)
    }

    pub fn wavelength_nm(&self, lower: &str, upper: &str) -> Option<f64> {
        self.wavelengths_nm.get(&format!("{lower}-{upper}")).copied()
    }

    pub fn reduced_dipole_ea0(&self, lower: &str, upper: &str) -> Option<f64> {
        self.dipoles_ea0.get(&format!("{lower}-{upper}")).copied()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(data_error(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if (2.0 * self.nuclear_spin).fract() != 0.0 || self.nuclear_spin < 0.0 {
            return Err(data_error("nuclear_spin", "must be a non-negative half-integer"));
        }
        for l in &self.levels {
            if (2.0 * l.j).fract() != 0.0 || (l.j - l.l as f64).abs() > 0.5 + 1e-12 {
                return Err(data_error("levels", format!("{}: J = {} incompatible with L = {}", l.name, l.j, l.l)));
            }
            for (f, _) in self.hyperfine(&l.name)? {
                let ok = f >= (l.j - self.nuclear_spin).abs() - 1e-12
                    && f <= l.j + self.nuclear_spin + 1e-12
                    && (f - l.j - self.nuclear_spin).fract().abs() < 1e-12;
                if !ok {
                    return Err(data_error("splittings_MHz", format!("{}: F = {f} not allowed", l.name)));
                }
            }
        }
        if !(self.reference_gamma_2pi_mhz() > 0.0) {
            return Err(data_error("reference_level", "needs a positive decay rate"));
        }
        for (upper, channels) in &self.branching {
            self.level(upper)?;
            let total: f64 = channels.values().sum();
            if (total - 1.0).abs() > 1e-12 || channels.values().any(|&b| b < 0.0) {
                return Err(data_error("branching", format!("{upper}: ratios sum to {total}")));
            }
        }
        for (name, &g) in &self.gammas_2pi_mhz {
            self.level(name)?;
            if !(g >= 0.0 && g.is_finite()) {
                return Err(data_error("gammas_2pi_MHz", format!("{name}: {g}")));
            }
            if g > 0.0 && !self.branching.contains_key(name) {
                return Err(data_error("branching", format!("{name} decays but has no branching entry")));
            }
        }
        for role in ROLES {
            let s = self.role(role)?;
            self.level(&s.level)?;
            self.shift_mhz(&s.level, s.f)?;
        }
        Ok(())
    }

    /// Normalised dipole amplitude between a lower and an upper Zeeman
    /// state for polarisation `q = m_upper - m_lower`. Summed over every
    /// lower sublevel of the fine-structure level and all `q`, the squares
    /// give 1 for each upper state.
    pub fn dipole_amplitude(&self, lower: &ZeemanState, upper: &ZeemanState, q: i32) -> f64 {
        let (Ok(la), Ok(lb)) = (self.level(&lower.level), self.level(&upper.level)) else {
            log::warn!("dipole amplitude between unknown levels {} and {}", lower.level, upper.level);
            return 0.0;
        };
        if la.l.abs_diff(lb.l) != 1 || (la.j - lb.j).abs() > 1.0 + 1e-12 {
            log::debug!("{} and {} are not dipole connected", la.name, lb.name);
            return 0.0;
        }
        hyperfine_amplitude(la.j, lower.f, lower.m, lb.j, upper.f, upper.m, self.nuclear_spin, q)
    }
}

/// `sqrt(2J_b+1) (-1)^{J_b+I+F_a+1} sqrt(2F_a+1) {J_b J_a 1; F_a F_b I} <F_a m_a; 1 q|F_b m_b>`
#[allow(clippy::too_many_arguments)]
pub(crate) fn hyperfine_amplitude(ja: f64, fa: f64, ma: f64, jb: f64, fb: f64, mb: f64, i: f64, q: i32) -> f64 {
    if (mb - ma - q as f64).abs() > 1e-12 || q.abs() > 1 {
        return 0.0;
    }
    let six = wigner6j(jb, ja, 1.0, fa, fb, i);
    if six == 0.0 {
        return 0.0;
    }
    let cg = clebsch_gordan(fa, ma, 1.0, q as f64, fb, mb);
    if cg == 0.0 {
        return 0.0;
    }
    let exponent = (jb + i + fa + 1.0).round() as i64;
    let sign = if exponent.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * ((2.0 * jb + 1.0) * (2.0 * fa + 1.0)).sqrt() * six * cg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_loads() {
        for a in [AtomSpec::cesium(), AtomSpec::cesium_stretched(), AtomSpec::rubidium()] {
            assert!(a.reference_gamma_2pi_mhz() > 0.0);
        }
        let cs = AtomSpec::cesium();
        assert!((cs.gamma("6P3/2") - 1.58).abs() < 1e-12);
        assert!((cs.gamma("6P1/2") - 1.38).abs() < 1e-12);
        assert_eq!(cs.role("0").unwrap(), ZeemanState::new("6S1/2", 4.0, 0.0).unwrap());
    }

    #[test]
    fn unknown_fields_and_bad_versions_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(CESIUM_JSON).unwrap();
        v["colour"] = serde_json::json!("blue");
        assert!(AtomSpec::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(CESIUM_JSON).unwrap();
        v["schema_version"] = serde_json::json!(99);
        assert!(AtomSpec::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(CESIUM_JSON).unwrap();
        v["branching"]["7S1/2"]["6P1/2"] = serde_json::json!(0.5);
        assert!(AtomSpec::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn zeeman_state_bounds() {
        assert!(ZeemanState::new("x", 1.0, 2.0).is_err());
        assert!(ZeemanState::new("x", 1.0, 0.5).is_err());
        assert!(ZeemanState::new("x", 1.5, -1.5).is_ok());
    }
}
