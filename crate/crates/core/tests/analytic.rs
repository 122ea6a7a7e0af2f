mod common;

use common::{ode_residuals, optimum_c10, random_params, rho_by_quadrature, SplitMix};
use diamond_node::analytic::*;
use diamond_node::diamond::{simulate_cycle, CycleOptions};
use num_complex::Complex64;

#[test]
fn intermediates_examples() {
    let mut p = optimum_c10();
    p.omega1 = 0.0;
    let im = intermediates(&p, AlphaConvention::Consistent).unwrap();
    assert_eq!(im.alpha, Complex64::new(0.0, 0.0));
    p.g = 0.0;
    let im = intermediates(&p, AlphaConvention::Consistent).unwrap();
    assert!((im.lambda.re - (p.kappa() + p.gamma3) / 4.0).abs() < 1e-12);
}

#[test]
fn c2_satisfies_eliminated_equations_at_c10_optimum() {
    let p = optimum_c10();
    assert_eq!(c2_amplitude(&p, 0.0).unwrap(), Complex64::new(0.0, 0.0));
    assert_eq!(c0_amplitude(&p, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    for &t in &[0.01, 0.03, 0.06, 0.1] {
        let (r2, r0) = ode_residuals(&p, t);
        assert!(r2 < 1e-10 && r0 < 1e-10, "t = {t}: {r2:e} {r0:e}");
    }
}

#[test]
fn c2_satisfies_eliminated_equations_randomly() {
    let mut rng = SplitMix(11);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let t = 0.5 * p.t1;
        let (r2, r0) = ode_residuals(&p, t);
        assert!(r2 < 1e-8 && r0 < 1e-8, "{p:?}: {r2:e} {r0:e}");
    }
}

#[test]
fn c2_is_linear_in_alpha() {
    let p = optimum_c10();
    let im = intermediates(&p, AlphaConvention::Consistent).unwrap();
    let mut im2 = im;
    im2.alpha *= 2.0;
    let t = 0.05;
    let r = c2_amplitude_with(&im2, t) / c2_amplitude_with(&im, t);
    assert!((r - Complex64::new(2.0, 0.0)).norm() < 1e-14);
}

#[test]
fn small_beta_branch_is_continuous() {
    let mut im = intermediates(&optimum_c10(), AlphaConvention::Consistent).unwrap();
    let t = 0.07;
    im.beta = Complex64::new(1e-8, 0.0);
    let near = c2_amplitude_with(&im, t);
    im.beta = Complex64::new(0.0, 0.0);
    let at = c2_amplitude_with(&im, t);
    let limit = Complex64::i() * im.alpha * t * (-im.lambda * t).exp();
    assert!((near - at).norm() < 1e-9);
    assert!((at - limit).norm() < 1e-15);
    // the direct sinh ratio just above the switch
    im.beta = Complex64::new(0.0101 / t, 0.0);
    let direct = c2_amplitude_with(&im, t);
    im.beta = Complex64::new(0.0099 / t, 0.0);
    let series = c2_amplitude_with(&im, t);
    assert!((direct - series).norm() < 1e-4 * direct.norm());
}

#[test]
fn rho_matches_quadrature_at_c10_optimum() {
    let p = optimum_c10();
    let closed = rho_e3_integral(&p, p.t1).unwrap();
    let quad = rho_by_quadrature(&p, p.t1);
    assert!(((closed - quad) / quad).abs() < 1e-10, "{closed} vs {quad}");
}

#[test]
fn rho_matches_quadrature_on_random_draws() {
    let mut rng = SplitMix(2024);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let closed = rho_e3_integral(&p, p.t1).unwrap();
        let quad = rho_by_quadrature(&p, p.t1);
        assert!(((closed - quad) / quad).abs() < 1e-10, "{p:?}: {closed} vs {quad}");
    }
}

#[test]
fn rho_limits() {
    let mut p = optimum_c10();
    p.kappa_f = 0.0;
    p.kappa_l = 0.0;
    assert_eq!(rho_e3_integral(&p, 0.1).unwrap(), 0.0);
    let mut p = optimum_c10();
    let base = rho_e3_integral(&p, p.t1).unwrap();
    p.gamma3 = 1e7;
    let v = rho_e3_integral(&p, p.t1).unwrap();
    assert!(v < 1e-4 * base, "{v} {base}");
}

#[test]
fn five_term_form_matches_integral_form() {
    let p = optimum_c10();
    let f = fidelity_closed_form(&p, p.t1).unwrap();
    let direct = rho_e3_integral(&p, p.t1).unwrap() + c2_amplitude(&p, p.t1).unwrap().norm_sqr();
    assert!((f - direct).abs() < 1e-9, "{f} vs {direct}");

    let mut rng = SplitMix(5);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let f = fidelity_closed_form(&p, p.t1).unwrap();
        let direct = rho_e3_integral(&p, p.t1).unwrap() + c2_amplitude(&p, p.t1).unwrap().norm_sqr();
        assert!((f - direct).abs() < 1e-9 * direct.max(1.0), "{p:?}: {f} vs {direct}");
    }
}

#[test]
fn closed_form_zero_without_first_pulse() {
    let mut p = optimum_c10();
    p.omega1 = 0.0;
    assert_eq!(fidelity_closed_form(&p, p.t1).unwrap(), 0.0);
    assert_eq!(fidelity_bad_cavity(&p, p.t1).unwrap(), 0.0);
}

#[test]
fn printed_alpha_differs_from_consistent() {
    let p = optimum_c10();
    let a = intermediates(&p, AlphaConvention::Consistent).unwrap().alpha.re;
    let b = intermediates(&p, AlphaConvention::Printed).unwrap().alpha.re;
    let den4 = p.gamma1 * p.gamma2 + 4.0 * p.omega_e.powi(2);
    let den1 = p.gamma1 * p.gamma2 + p.omega_e.powi(2);
    assert!((b / a - den4 / den1).abs() < 1e-12);
    // only the consistent variant keeps the estimate a probability
    assert!(fidelity_closed_form(&p, p.t1).unwrap() <= 1.0);
    assert!(fidelity_closed_form_with(&p, p.t1, AlphaConvention::Printed).unwrap() > 1.0);
}

#[test]
fn bad_cavity_limit_close_to_full_form() {
    let p = optimum_c10();
    let full = fidelity_closed_form(&p, p.t1).unwrap();
    let bad = fidelity_bad_cavity(&p, p.t1).unwrap();
    assert!(((bad - full) / full).abs() < 0.02, "{bad} vs {full}");
    assert_eq!(fidelity_bad_cavity(&p, 0.0).unwrap(), 0.0);
}

#[test]
fn scaling_examples() {
    let e = std::f64::consts::E;
    let d = scaling_parameters(&ScalingChoice { a: 1.0, cooperativity: e }, 1.0, 1.0, 1.0).unwrap();
    assert!((d.omega1 - e).abs() < 1e-12 && (d.omega_e - e).abs() < 1e-12 && (d.t1 - 1.0 / e).abs() < 1e-12);
    let d = scaling_parameters(&ScalingChoice { a: 0.5, cooperativity: 10.0 }, 1.0, 1.0, 1.0).unwrap();
    assert!((d.omega1 - 5.0).abs() < 1e-12 && (d.omega_e - 10.0).abs() < 1e-12);
    assert!((d.t1 - 10f64.ln() / 10.0).abs() < 1e-12);
    assert!(d.scaling_holds);
    let d = scaling_parameters(&ScalingChoice { a: 0.3, cooperativity: 10.0 }, 1.0, 1.0, 1.0).unwrap();
    assert!(!d.scaling_holds);
    assert!(scaling_parameters(&ScalingChoice { a: 0.5, cooperativity: 1.0 }, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn scaling_law_band() {
    let mut ratios = Vec::new();
    for c in [10.0, 30.0, 100.0, 300.0, 1000.0] {
        let p = scaled_params(&ScalingChoice { a: 0.5, cooperativity: c }, 2000.0, 1.0, 1.0, 1.0).unwrap();
        let err = 1.0 - fidelity_closed_form(&p, p.t1).unwrap();
        ratios.push(err * c / f64::ln(c));
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 3.0, "{ratios:?}");
}

#[test]
fn analytic_tracks_master_equation_in_adiabatic_regime() {
    let mut p = optimum_c10();
    p.omega1 = 0.3 * std::f64::consts::SQRT_2 * p.omega_e;
    p.t1 = 0.2;
    p.t2 = p.t1 + std::f64::consts::FRAC_PI_2 / p.omega2;
    assert!(intermediates(&p, AlphaConvention::Consistent).unwrap().adiabatic);
    let master = simulate_cycle(&p, &CycleOptions::default()).unwrap().fidelity;
    let analytic = fidelity_closed_form(&p, p.t1).unwrap();
    assert!((master - analytic).abs() <= 0.03, "master {master} analytic {analytic}");
}
