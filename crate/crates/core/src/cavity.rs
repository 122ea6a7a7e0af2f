//! Cavity design parameters to simulator rates: `κ = ω/Q`, peak coupling
//! from the mode volume, evanescent fall-off of `g` away from the surface.
//!
//! SI rates are angular frequencies in rad/s; `γ`-unit rates are divided
//! by the atom's reference decay rate.

use serde::{Deserialize, Serialize};

use crate::atomic::AtomSpec;
use crate::diamond::cooperativity;
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Atomic unit of electric dipole moment, `e a0`, in C m.
pub const EA0: f64 = 8.478_353_625_5e-30;

/// Conversion between SI angular rates and multiples of a reference `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaUnit {
    /// `γ / 2π` in MHz.
    pub gamma_2pi_mhz: f64,
}

impl GammaUnit {
    pub fn new(gamma_2pi_mhz: f64) -> Result<Self> {
        if !(gamma_2pi_mhz > 0.0 && gamma_2pi_mhz.is_finite()) {
            return Err(Error::param("gamma_2pi_mhz", format!("{gamma_2pi_mhz} must be positive")));
        }
        Ok(Self { gamma_2pi_mhz })
    }

    pub fn of_atom(atom: &AtomSpec) -> Result<Self> {
        Self::new(atom.reference_gamma_2pi_mhz())
    }

    /// `γ` in rad/s.
    pub fn rad_per_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.gamma_2pi_mhz * 1e6
    }

    pub fn rate_to_gamma(&self, rad_per_s: f64) -> f64 {
        rad_per_s / self.rad_per_s()
    }

    pub fn rate_to_si(&self, gammas: f64) -> f64 {
        gammas * self.rad_per_s()
    }

    pub fn time_to_gamma(&self, seconds: f64) -> f64 {
        seconds * self.rad_per_s()
    }

    pub fn time_to_si(&self, inverse_gammas: f64) -> f64 {
        inverse_gammas / self.rad_per_s()
    }
}

/// A rate in both unit systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rate {
    pub rad_per_s: f64,
    pub gamma: f64,
}

impl Rate {
    fn new(rad_per_s: f64, unit: GammaUnit) -> Self {
        Self { rad_per_s, gamma: unit.rate_to_gamma(rad_per_s) }
    }

    /// `rate / 2π` in GHz.
    pub fn ghz_2pi(&self) -> f64 {
        self.rad_per_s / (2.0 * std::f64::consts::PI * 1e9)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub wavelength_nm: f64,
    pub quality_factor: f64,
    /// In units of `(λ/n)³`.
    pub mode_volume: f64,
    pub refractive_index: f64,
    /// Transition dipole of the cavity transition between the role
    /// sublevels, in `e a0`.
    pub dipole_ea0: f64,
    /// Trap position above the surface.
    pub surface_distance_nm: f64,
    /// 1/e length of `g` away from the surface.
    pub decay_length_nm: f64,
    /// Mode field at the surface relative to its maximum inside the
    /// dielectric.
    pub surface_field_fraction: f64,
}

/// Device entries of the bundled design file; the dipole comes from the
/// atomic data.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityDesign {
    wavelength_nm: f64,
    quality_factor: f64,
    mode_volume: f64,
    refractive_index: f64,
    surface_distance_nm: f64,
    decay_length_nm: f64,
    surface_field_fraction: f64,
    #[allow(dead_code)]
    provenance: Vec<String>,
}

impl CavityParams {
    /// The silicon-nitride photonic-crystal cavity at the cesium
    /// `7S1/2 - 6P1/2` line.
    pub fn cesium_pcc() -> Result<Self> {
        let d: CavityDesign = serde_json::from_str(include_str!("../data/cavity_pcc.json"))?;
        let p = Self {
            wavelength_nm: d.wavelength_nm,
            quality_factor: d.quality_factor,
            mode_volume: d.mode_volume,
            refractive_index: d.refractive_index,
            dipole_ea0: cavity_dipole_ea0(&AtomSpec::cesium())?,
            surface_distance_nm: d.surface_distance_nm,
            decay_length_nm: d.decay_length_nm,
            surface_field_fraction: d.surface_field_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength_nm", self.wavelength_nm),
            ("quality_factor", self.quality_factor),
            ("mode_volume", self.mode_volume),
            ("decay_length_nm", self.decay_length_nm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if !(self.refractive_index > 1.0 && self.refractive_index.is_finite()) {
            return Err(Error::param("refractive_index", "must exceed 1"));
        }
        if !(self.dipole_ea0 >= 0.0 && self.dipole_ea0.is_finite()) {
            return Err(Error::param("dipole_ea0", "must be finite and >= 0"));
        }
        if !(self.surface_field_fraction > 0.0 && self.surface_field_fraction <= 1.0) {
            return Err(Error::param("surface_field_fraction", "must lie in (0, 1]"));
        }
        if !(self.surface_distance_nm >= 0.0 && self.surface_distance_nm.is_finite()) {
            return Err(Error::param("surface_distance_nm", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }

    /// Mode volume in m³.
    pub fn volume_m3(&self) -> f64 {
        self.mode_volume * (self.wavelength_nm * 1e-9 / self.refractive_index).powi(3)
    }
}

/// Dipole of the role transition `e2 -> e3` in `e a0`: reduced element
/// over `√(2J_upper + 1)` times the normalised sublevel amplitude.
pub fn cavity_dipole_ea0(atom: &AtomSpec) -> Result<f64> {
    let (e2, e3) = (atom.role("e2")?, atom.role("e3")?);
    let reduced = atom
        .reduced_dipole_ea0(&e3.level, &e2.level)
        .ok_or_else(|| Error::AtomicData(format!("no dipole for {}-{}", e3.level, e2.level)))?;
    let j = atom.level(&e2.level)?.j;
    let q = (e2.m - e3.m).round() as i32;
    Ok(reduced / (2.0 * j + 1.0).sqrt() * atom.dipole_amplitude(&e3, &e2, q).abs())
}

/// `κ = 2πc / (λ Q)`
pub fn kappa_from_q(params: &CavityParams, unit: GammaUnit) -> Result<Rate> {
    params.validate()?;
    Ok(Rate::new(params.omega() / params.quality_factor, unit))
}

/// Coupling at the field maximum, `g = d √(ω / (2 ħ ε0 n² V))`. The peak
/// sits inside the dielectric, hence the `n²`.
pub fn g_from_mode_volume(params: &CavityParams, unit: GammaUnit) -> Result<Rate> {
    params.validate()?;
    let n2 = params.refractive_index.powi(2);
    let field = (params.omega() / (2.0 * HBAR * EPSILON_0 * n2 * params.volume_m3())).sqrt();
    Ok(Rate::new(params.dipole_ea0 * EA0 * field, unit))
}

/// `g(z) = g_peak s e^{-z / decay_length}` at height `z` above the surface,
/// `s` the surface field fraction.
pub fn g_at_distance(params: &CavityParams, z_nm: f64, unit: GammaUnit) -> Result<Rate> {
    if !(z_nm >= 0.0 && z_nm.is_finite()) {
        return Err(Error::param("z_nm", format!("{z_nm} must be finite and >= 0")));
    }
    let peak = g_from_mode_volume(params, unit)?;
    let f = params.surface_field_fraction * (-z_nm / params.decay_length_nm).exp();
    Ok(Rate::new(peak.rad_per_s * f, unit))
}

/// Critical coupling: `(κ_f, κ_l) = (κ/2, κ/2)`.
pub fn critical_split(kappa: f64) -> (f64, f64) {
    (kappa / 2.0, kappa / 2.0)
}

/// Rates of the cavity at one distance, in `γ` units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CavityPoint {
    pub distance_nm: f64,
    pub g: Rate,
    pub kappa: Rate,
    pub kappa_f: f64,
    pub kappa_l: f64,
    pub cooperativity: f64,
}

/// `g`, `κ` and `C = g² / (κ (γ2 + γ3))` at distance `z_nm`.
pub fn cavity_point(
    params: &CavityParams,
    z_nm: f64,
    unit: GammaUnit,
    gamma2: f64,
    gamma3: f64,
) -> Result<CavityPoint> {
    let g = g_at_distance(params, z_nm, unit)?;
    let kappa = kappa_from_q(params, unit)?;
    let (kappa_f, kappa_l) = critical_split(kappa.gamma);
    Ok(CavityPoint {
        distance_nm: z_nm,
        g,
        kappa,
        kappa_f,
        kappa_l,
        cooperativity: cooperativity(g.gamma, kappa.gamma, gamma2, gamma3)?,
    })
}
