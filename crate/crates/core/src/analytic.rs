//! Closed-form estimates for the first pulse with the intermediate levels
//! adiabatically eliminated.
//!
//! With `c0` and `c2` the amplitudes of `|0, 0_ph>` and `|e3, 1_ph>`,
//!
//! ```text
//! c0' = -a c0 + i k c2,    c2' = -b c2 + i k c0,
//! a = 2 γ2 Ω1² / D,   b = 2 g² γ1 / D + (κ + γ3) / 2,   k = 4 g Ωe Ω1 / D,
//! D = γ1 γ2 + 4 Ωe²,
//! ```
//!
//! so `c2(t) = i (α/β) e^{-λt} sinh(βt)` with `α = k`, `λ = (a + b)/2` and
//! `β² = ((b - a)/2)² - k²`. The fidelity estimate is the population
//! `ρ_e3,0(t1) + |c2(t1)|²` that the second pulse returns to `|0>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diamond::DiamondParams;
use crate::error::{Error, Result};

/// Below this `|β| t1` the sinh ratio is expanded in powers of `β²`.
const SMALL_BETA_T: f64 = 1e-2;
/// Exponent denominators smaller than this switch to the regrouped form.
const SMALL_DENOMINATOR: f64 = 1e-9;

/// Denominator used for `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConvention {
    /// `γ1 γ2 + 4 Ωe²`, as in `β`, `λ` and the eliminated equations.
    #[default]
    Consistent,
    /// `γ1 γ2 + Ωe²`, as printed alongside the other definitions.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticIntermediates {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub lambda: Complex64,
    /// `Ω1 <= 0.3 √2 Ωe`, where the elimination is trustworthy.
    pub adiabatic: bool,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn intermediates(p: &DiamondParams, convention: AlphaConvention) -> Result<AnalyticIntermediates> {
    let (g, o1, oe) = (p.g, p.omega1, p.omega_e);
    let (g1, g2, g3, kappa) = (p.gamma1, p.gamma2, p.gamma3, p.kappa());
    let den = g1 * g2 + 4.0 * oe * oe;
    if den == 0.0 {
        return Err(Error::DivisionByZero("gamma1 gamma2 + 4 omega_e^2"));
    }
    let alpha_den = match convention {
        AlphaConvention::Consistent => den,
        AlphaConvention::Printed => g1 * g2 + oe * oe,
    };
    if alpha_den == 0.0 {
        return Err(Error::DivisionByZero("alpha denominator"));
    }
    let alpha = 4.0 * g * oe * o1 / alpha_den;
    let x = den * (kappa + g3) - 4.0 * g2 * o1 * o1 + 4.0 * g * g * g1;
    let disc = x * x - 256.0 * g * g * o1 * o1 * oe * oe;
    let beta = c(disc).sqrt() / (4.0 * den);
    let lambda = (g * g * g1 + o1 * o1 * g2) / den + (kappa + g3) / 4.0;
    let adiabatic = o1 <= 0.3 * std::f64::consts::SQRT_2 * oe;
    if !adiabatic {
        log::warn!(
            "omega1 = {o1} exceeds 0.3 sqrt(2) omega_e = {}; adiabatic elimination is doubtful",
            0.3 * std::f64::consts::SQRT_2 * oe
        );
    }
    Ok(AnalyticIntermediates { alpha: c(alpha), beta, lambda: c(lambda), adiabatic })
}

/// `e^{-λt} sinh(βt) / β`, continuous through `β = 0` and free of
/// overflow when `|β| t` is large.
fn damped_sinh_over_beta(lambda: Complex64, beta: Complex64, t: f64) -> Complex64 {
    let z = beta * t;
    if z.norm() < SMALL_BETA_T {
        let z2 = z * z;
        (-lambda * t).exp() * c(t) * (c(1.0) + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0)
    } else {
        (((beta - lambda) * t).exp() - (-(beta + lambda) * t).exp()) / (2.0 * beta)
    }
}

pub fn c2_amplitude_with(im: &AnalyticIntermediates, t: f64) -> Complex64 {
    Complex64::i() * im.alpha * damped_sinh_over_beta(im.lambda, im.beta, t)
}

/// `c2(t) = i (α/β) e^{-λt} sinh(βt)`; `α t e^{-λt}` in the `β → 0` limit.
pub fn c2_amplitude(p: &DiamondParams, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be >= 0"));
    }
    let im = intermediates(p, AlphaConvention::Consistent)?;
    Ok(c2_amplitude_with(&im, t))
}

/// The companion amplitude `c0(t) = e^{-λt} (cosh βt + ((b - a)/2) sinh(βt)/β)`.
pub fn c0_amplitude(p: &DiamondParams, t: f64) -> Result<Complex64> {
    let im = intermediates(p, AlphaConvention::Consistent)?;
    let den = p.gamma1 * p.gamma2 + 4.0 * p.omega_e * p.omega_e;
    let a = 2.0 * p.gamma2 * p.omega1 * p.omega1 / den;
    let half_diff = im.lambda - a;
    let damped_cosh = 0.5 * (((im.beta - im.lambda) * t).exp() + (-(im.beta + im.lambda) * t).exp());
    Ok(damped_cosh + half_diff * damped_sinh_over_beta(im.lambda, im.beta, t))
}

/// `-expm1(-k t) / k = ∫_0^t e^{-k s} ds` for complex `k`, stable near 0.
fn exp_integral(k: Complex64, t: f64) -> Complex64 {
    let z = -k * t;
    if z.norm() < 1e-4 {
        return c(t) * (c(1.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
    }
    // expm1 for complex argument without cancellation in the real part
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    let em1 = Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin());
    -em1 / k
}

/// `e^{-d t} ∫_0^t e^{-k u} du`, finite whenever `Re k + d >= 0`.
fn damped_exp_integral(k: Complex64, d: f64, t: f64) -> Complex64 {
    if -k.re * t > 1.0 {
        ((-(k + d) * t).exp() - c((-d * t).exp())) / -k
    } else {
        (-d * t).exp() * exp_integral(k, t)
    }
}

/// `e^{-d t} ∫_0^t u^m e^{-s u} du`, finite whenever `s + d >= 0`.
fn damped_moment(m: u32, s: f64, d: f64, t: f64) -> f64 {
    let x = -s * t;
    if x <= 1.0 {
        return (-d * t).exp() * moment(m, s, t);
    }
    // u = t (1 - w): e^{-(s + d) t} t^{m+1} ∫_0^1 (1 - w)^m e^{-x w} dw
    let mut i = -(-x).exp_m1() / x;
    for j in 1..=m {
        i = (1.0 - j as f64 * i) / x;
    }
    (-(s + d) * t).exp() * t.powi(m as i32 + 1) * i
}

/// `∫_0^t u^m e^{-s u} du`
fn moment(m: u32, s: f64, t: f64) -> f64 {
    let x = s * t;
    if x > (m as f64) + 2.0 {
        // m!/s^{m+1} (1 - e^{-x} sum_{k<=m} x^k/k!)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=m {
            term *= x / k as f64;
            sum += term;
        }
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        fact / s.powi(m as i32 + 1) * (1.0 - (-x).exp() * sum)
    } else {
        // t^{m+1} sum_k (-x)^k / (k! (m + 1 + k))
        let mut term = 1.0;
        let mut sum = 1.0 / (m as f64 + 1.0);
        let mut k = 0u32;
        loop {
            k += 1;
            term *= -x / k as f64;
            let add = term / (m + 1 + k) as f64;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() || k > 400 {
                break;
            }
        }
        t.powi(m as i32 + 1) * sum
    }
}

/// `ρ_e3,0(t1) = κ ∫_0^{t1} |c2(t)|² e^{-γ3 (t1 - t)} dt` in closed form.
/// The `e^{-γ3 t1}` factor is folded into each exponential integral.
pub fn rho_e3_integral(p: &DiamondParams, t1: f64) -> Result<f64> {
    let im = intermediates(p, AlphaConvention::Consistent)?;
    rho_e3_integral_with(p, &im, t1)
}

pub fn rho_e3_integral_with(p: &DiamondParams, im: &AnalyticIntermediates, t1: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::param("t1", "must be positive"));
    }
    let kappa = p.kappa();
    let g3 = p.gamma3;
    let s = 2.0 * im.lambda.re - g3;
    let beta = im.beta;
    // β² is real for real couplings
    let b = (beta * beta).re;
    let j = if beta.norm() * t1 < SMALL_BETA_T {
        // |sinh(βt)/β|² = t² (1 + b t²/3 + 2 b² t⁴/45 + ...)
        let m = |k: u32| damped_moment(k, s, g3, t1);
        m(2) + b / 3.0 * m(4) + 2.0 * b * b / 45.0 * m(6)
    } else {
        let (br, bi) = (beta.re, beta.im);
        let e = |k: Complex64| damped_exp_integral(k, g3, t1);
        let v = 0.5 * e(c(s - 2.0 * br)) + 0.5 * e(c(s + 2.0 * br)) - e(Complex64::new(s, -2.0 * bi));
        v.re / (2.0 * beta.norm_sqr())
    };
    Ok(kappa * im.alpha.norm_sqr() * j)
}

/// Full closed-form fidelity: the five-exponential bracket for `ρ_e3,0`
/// plus the photon still in the cavity, `|c2(t1)|²`.
pub fn fidelity_closed_form(p: &DiamondParams, t1: f64) -> Result<f64> {
    fidelity_closed_form_with(p, t1, AlphaConvention::Consistent)
}

pub fn fidelity_closed_form_with(p: &DiamondParams, t1: f64, convention: AlphaConvention) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::param("t1", "must be positive"));
    }
    let im = intermediates(p, convention)?;
    let in_cavity = c2_amplitude_with(&im, t1).norm_sqr();
    Ok(five_term_bracket(p, &im, t1)? + in_cavity)
}

fn five_term_bracket(p: &DiamondParams, im: &AnalyticIntermediates, t1: f64) -> Result<f64> {
    let g3 = p.gamma3;
    let lambda = im.lambda.re;
    let (br, bi) = (im.beta.re, im.beta.im);
    let beta2 = im.beta * im.beta;
    let s = 2.0 * lambda - g3;
    let dens = [Complex64::new(2.0 * lambda - g3, -2.0 * bi), c(2.0 * (lambda - br) - g3), c(2.0 * (lambda + br) - g3)];
    let bc2 = im.beta.conj().powi(2);
    let d5 = (beta2 - s * s).powi(2) - 2.0 * (beta2 + s * s) * bc2 + bc2 * bc2;
    let degenerate = im.beta.norm() * t1 < SMALL_BETA_T
        || dens.iter().any(|d| d.norm() < SMALL_DENOMINATOR)
        || d5.norm() < SMALL_DENOMINATOR;
    if degenerate {
        // removable singularities: the regrouped integral is regular
        return rho_e3_integral_with(p, im, t1);
    }
    let e_c = Complex64::new(-2.0 * lambda * t1, 2.0 * bi * t1).exp() / dens[0];
    let bracket =
        2.0 * e_c.re - (-2.0 * (lambda - br) * t1).exp() / dens[1].re - (-2.0 * (lambda + br) * t1).exp() / dens[2].re
            + (8.0 * im.beta.norm_sqr() * s * (-g3 * t1).exp() / d5).re;
    Ok(p.kappa() * im.alpha.norm_sqr() / (4.0 * im.beta.norm_sqr()) * bracket)
}

/// Bad-cavity limit `κ ≫ g, Ω1, Ωe, γ` of the closed form.
pub fn fidelity_bad_cavity(p: &DiamondParams, t1: f64) -> Result<f64> {
    if !(t1 >= 0.0) {
        return Err(Error::param("t1", "must be >= 0"));
    }
    let (g, o1, oe) = (p.g, p.omega1, p.omega_e);
    let (g1, g2, g3, kappa) = (p.gamma1, p.gamma2, p.gamma3, p.kappa());
    let largest = [g, o1, oe, g1, g2, g3].into_iter().fold(0.0, f64::max);
    if kappa < 50.0 * largest {
        log::warn!("kappa = {kappa} is below 50x the largest other rate ({largest}); bad-cavity limit is doubtful");
    }
    let xp = 4.0 * g * g * g1 + g1 * g2 * kappa + 4.0 * kappa * oe * oe;
    if xp == 0.0 {
        return Err(Error::DivisionByZero("bad-cavity denominator"));
    }
    let r = 4.0 * (4.0 * g * g + g2 * kappa) * o1 * o1 / xp;
    // (e^{-r t} - e^{-γ3 t}) / (γ3 - r) = e^{-γ3 t} ∫_0^t e^{-(r - γ3) s} ds
    let diff = damped_exp_integral(c(r - g3), g3, t1).re;
    Ok(64.0 * g * g * kappa * o1 * o1 * oe * oe / (xp * xp) * diff)
}

/// `Ω1 = a C γ1`, `Ωe = C γ2`, `γ1 t1 = ln C / C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingChoice {
    pub a: f64,
    pub cooperativity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledDrives {
    pub omega1: f64,
    pub omega_e: f64,
    pub t1: f64,
    /// `4a² >= γ2/(γ2 + γ3)`, the condition for `1 - F ~ ln C / C`.
    pub scaling_holds: bool,
}

pub fn scaling_parameters(choice: &ScalingChoice, gamma1: f64, gamma2: f64, gamma3: f64) -> Result<ScaledDrives> {
    let cc = choice.cooperativity;
    if !(cc > 1.0) {
        return Err(Error::param("cooperativity", "must exceed 1 for ln C / C to be positive"));
    }
    if !(choice.a > 0.0) {
        return Err(Error::param("a", "must be positive"));
    }
    if !(gamma1 > 0.0) {
        return Err(Error::param("gamma1", "must be positive"));
    }
    let scaling_holds = 4.0 * choice.a * choice.a >= gamma2 / (gamma2 + gamma3);
    if !scaling_holds {
        log::warn!(
            "4a^2 = {} is below gamma2/(gamma2+gamma3); the ln C / C scaling does not apply",
            4.0 * choice.a * choice.a
        );
    }
    Ok(ScaledDrives {
        omega1: choice.a * cc * gamma1,
        omega_e: cc * gamma2,
        t1: cc.ln() / (cc * gamma1),
        scaling_holds,
    })
}

/// Generic-model parameters at cooperativity `C` following the scaling choice.
pub fn scaled_params(
    choice: &ScalingChoice,
    kappa: f64,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
) -> Result<DiamondParams> {
    let d = scaling_parameters(choice, gamma1, gamma2, gamma3)?;
    let mut p = DiamondParams::for_cooperativity(choice.cooperativity, kappa)?;
    p.gamma1 = gamma1;
    p.gamma2 = gamma2;
    p.gamma3 = gamma3;
    p.g = crate::diamond::g_for_cooperativity(choice.cooperativity, kappa, gamma2, gamma3)?;
    p.omega1 = d.omega1;
    p.omega_e = d.omega_e;
    p.t1 = d.t1;
    p.t2 = crate::diamond::default_t2(d.t1, p.omega2);
    Ok(p)
}
