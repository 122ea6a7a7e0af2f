//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use diamond_node::analytic::{c0_amplitude, c2_amplitude};
use diamond_node::diamond::DiamondParams;
use num_complex::Complex64;

fn fact(n: i64) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

fn is_int(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Integers and half-integers in `[0, jmax]`.
pub fn spins(jmax: f64) -> Vec<f64> {
    (0..=(2.0 * jmax) as i64).map(|k| k as f64 / 2.0).collect()
}

fn triangle(a: f64, b: f64, c: f64) -> bool {
    c <= a + b + 1e-9 && c >= (a - b).abs() - 1e-9 && is_int(a + b + c)
}

fn delta(a: f64, b: f64, c: f64) -> f64 {
    let r = |x: f64| x.round() as i64;
    (fact(r(a + b - c)) * fact(r(a - b + c)) * fact(r(-a + b + c)) / fact(r(a + b + c + 1.0))).sqrt()
}

/// 3j symbol from the Racah sum in plain `f64`.
pub fn racah_3j(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> f64 {
    if (m1 + m2 + m3).abs() > 1e-9 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j + 1e-9 || !is_int(j + m) {
            return 0.0;
        }
    }
    let r = |x: f64| x.round() as i64;
    let pre = delta(j1, j2, j3)
        * (fact(r(j1 + m1))
            * fact(r(j1 - m1))
            * fact(r(j2 + m2))
            * fact(r(j2 - m2))
            * fact(r(j3 + m3))
            * fact(r(j3 - m3)))
        .sqrt();
    let mut sum = 0.0;
    for k in 0..=r(j1 + j2 + j3) {
        let args = [k, r(j1 + j2 - j3) - k, r(j1 - m1) - k, r(j2 + m2) - k, r(j3 - j2 + m1) + k, r(j3 - j1 - m2) + k];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / args.iter().map(|&a| fact(a)).product::<f64>();
    }
    let phase = if r(j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// 6j symbol from the Racah sum in plain `f64`.
pub fn racah_6j(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> f64 {
    let triads = [(a, b, c), (a, e, f), (d, b, f), (d, e, c)];
    if !triads.iter().all(|&(x, y, z)| triangle(x, y, z)) {
        return 0.0;
    }
    let r = |x: f64| x.round() as i64;
    let pre: f64 = triads.iter().map(|&(x, y, z)| delta(x, y, z)).product();
    let sums = triads.map(|(x, y, z)| r(x + y + z));
    let pairs = [r(a + b + d + e), r(a + c + d + f), r(b + c + e + f)];
    let mut total = 0.0;
    for k in 0..=pairs.iter().copied().min().unwrap() {
        if sums.iter().any(|&s| k < s) {
            continue;
        }
        let den: f64 =
            sums.iter().map(|&s| fact(k - s)).product::<f64>() * pairs.iter().map(|&p| fact(p - k)).product::<f64>();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * fact(k + 1) / den;
    }
    pre * total
}

/// `<j1 m1; j2 m2 | j m>` from the oracle 3j symbol.
pub fn cg(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
    let r = (j1 - j2 + m).round() as i64;
    let phase = if r.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * (2.0 * j + 1.0).sqrt() * racah_3j(j1, j2, j, m1, m2, -m)
}

/// Hyperfine dipole amplitude built in the uncoupled `|J m_J>|I m_I>`
/// basis, with the fine-structure amplitude `<J_a m_a; 1 q | J_b m_b>`.
pub fn uncoupled_amplitude(ja: f64, fa: f64, ma: f64, jb: f64, fb: f64, mb: f64, i: f64, q: i32) -> f64 {
    let mut total = 0.0;
    for mi in (0..=(2.0 * i).round() as i64).map(|k| k as f64 - i) {
        let mja = ma - mi;
        let mjb = mb - mi;
        if mja.abs() > ja + 1e-9 || mjb.abs() > jb + 1e-9 {
            continue;
        }
        let a = cg(ja, mja, i, mi, fa, ma);
        let b = cg(jb, mjb, i, mi, fb, mb);
        total += a * b * cg(ja, mja, 1.0, q as f64, jb, mjb);
    }
    total
}

/// Optimised C = 10 drives at kappa = 2000 (generic model, master equation).
pub fn optimum_c10() -> DiamondParams {
    let mut p = DiamondParams::for_cooperativity(10.0, 2000.0).unwrap();
    p.omega1 = 28.2891;
    p.omega_e = 40.7012;
    p.omega2 = 355.993;
    p.t1 = 0.104613;
    p.t2 = p.t1 + 4.41444e-3;
    p
}

pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.next()).exp()
    }
}

pub fn random_params(rng: &mut SplitMix) -> DiamondParams {
    let kappa = rng.log_uniform(100.0, 5000.0);
    let mut p = DiamondParams::for_cooperativity(10.0, kappa).unwrap();
    p.g = rng.log_uniform(0.1, 10.0) * kappa.sqrt();
    p.gamma1 = rng.log_uniform(0.1, 10.0);
    p.gamma2 = rng.log_uniform(0.1, 10.0);
    p.gamma3 = rng.log_uniform(0.1, 10.0);
    p.omega1 = rng.log_uniform(0.1, 10.0) * 3.0;
    p.omega_e = rng.log_uniform(0.1, 10.0) * 10.0;
    p.kappa_f = 0.5 * kappa;
    p.kappa_l = 0.5 * kappa;
    p.t1 = rng.log_uniform(0.01, 3.0);
    p.t2 = p.t1 + 0.01;
    p
}

/// Adaptive 7/15-point Gauss–Kronrod.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    const XK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_5,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_48,
        0.0,
    ];
    const WK: [f64; 8] = [
        0.022_935_322_010_529_224,
        0.063_092_092_629_978_56,
        0.104_790_010_322_250_19,
        0.140_653_259_715_525_92,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_42,
        0.204_432_940_075_298_89,
        0.209_482_141_084_727_82,
    ];
    const WG: [f64; 4] =
        [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = WK[7] * f(c);
    let mut g = WG[3] * f(c);
    for i in 0..7 {
        let x = h * XK[i];
        let s = f(c - x) + f(c + x);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive quadrature: a panel is accepted once its error estimate is
/// below its share of `rel * |integral|`. The starting panels are graded
/// towards `a`, where the fast transient lives.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    let n = 64;
    let edge = |k: usize| a + (b - a) * (k * k) as f64 / (n * n) as f64;
    let mut stack: Vec<(f64, f64)> = (0..n).map(|k| (edge(k), edge(k + 1))).collect();
    let rough: f64 = stack.iter().map(|&(lo, hi)| gk15(f, lo, hi).0).sum();
    let target = rel * rough.abs();
    let mut total = 0.0;
    while let Some((lo, hi)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        let share = target * (hi - lo) / (b - a);
        if !(err > share) || hi - lo < 1e-12 * (b - a) {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    total
}

/// `rho_{e3,0}(t1)` by adaptive quadrature of the `c2` amplitude.
pub fn rho_by_quadrature(p: &DiamondParams, t1: f64) -> f64 {
    let f = |t: f64| p.kappa() * c2_amplitude(p, t).unwrap().norm_sqr() * (-p.gamma3 * (t1 - t)).exp();
    gauss_kronrod(&f, 0.0, t1, 1e-12)
}

fn d5(f: impl Fn(f64) -> Complex64, t: f64, h: f64) -> Complex64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// Relative residuals of `(c2, c0)` in the adiabatically eliminated
/// equations, by five-point differences.
pub fn ode_residuals(p: &DiamondParams, t: f64) -> (f64, f64) {
    let den = p.gamma1 * p.gamma2 + 4.0 * p.omega_e * p.omega_e;
    let a = 2.0 * p.gamma2 * p.omega1 * p.omega1 / den;
    let b = 2.0 * p.g * p.g * p.gamma1 / den + (p.kappa() + p.gamma3) / 2.0;
    let k = 4.0 * p.g * p.omega_e * p.omega1 / den;
    let i = Complex64::i();
    let c0 = |t: f64| c0_amplitude(p, t).unwrap();
    let c2 = |t: f64| c2_amplitude(p, t).unwrap();
    let h = 1.2e-3 / (a + b);
    let r2 = d5(c2, t, h) - (-b * c2(t) + i * k * c0(t));
    let r0 = d5(c0, t, h) - (-a * c0(t) + i * k * c2(t));
    // measured against the fastest rate, which sets the difference step
    let scale = (a + b + k) * c0(t).norm().max(c2(t).norm());
    (r2.norm() / scale, r0.norm() / scale)
}
