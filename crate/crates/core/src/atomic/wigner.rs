//! Wigner 3j and 6j symbols from the Racah sums in exact rational
//! arithmetic. Arguments are angular momenta as `f64` and must be integers
//! or half-integers; anything else yields 0 with a debug notice.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// `2 j` as an integer if `j` is a (half-)integer.
fn twice(j: f64) -> Option<i64> {
    let t = (2.0 * j).round();
    ((2.0 * j - t).abs() < 1e-9 && t.abs() < 1e6).then_some(t as i64)
}

fn factorial(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `a + b + c` even and triangle-compatible, all in doubled units.
fn triangle(a: i64, b: i64, c: i64) -> bool {
    (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= c + a && a >= 0 && b >= 0 && c >= 0
}

/// `Δ(abc)² = (a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!` (doubled inputs).
fn delta_sq(a: i64, b: i64, c: i64) -> BigRational {
    BigRational::new(
        factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2),
        factorial((a + b + c) / 2 + 1),
    )
}

/// `sign · sqrt(sq) · sum` evaluated in `f64` at the end.
fn finish(sq: BigRational, sum: BigRational) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let s = sum.to_f64().unwrap_or(f64::NAN);
    s * sq.to_f64().unwrap_or(f64::NAN).sqrt()
}

fn parity(n: i64) -> BigRational {
    if n.rem_euclid(2) == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// ```text
/// ( j1 j2 j3 )
/// ( m1 m2 m3 )
/// ```
pub fn wigner3j(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> f64 {
    let v: Option<Vec<i64>> = [j1, j2, j3, m1, m2, m3].map(twice).into_iter().collect();
    let Some(v) = v else {
        log::debug!("3j symbol with non half-integer argument");
        return 0.0;
    };
    wigner3j_twice([v[0], v[1], v[2]], [v[3], v[4], v[5]])
}

/// 3j symbol with every argument doubled.
pub(crate) fn wigner3j_twice([j1, j2, j3]: [i64; 3], [m1, m2, m3]: [i64; 3]) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    if [(j1, m1), (j2, m2), (j3, m3)].iter().any(|&(j, m)| m.abs() > j || (j + m) % 2 != 0) {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let sq = delta_sq(j1, j2, j3)
        * BigRational::from_integer(
            factorial(h(j1 + m1))
                * factorial(h(j1 - m1))
                * factorial(h(j2 + m2))
                * factorial(h(j2 - m2))
                * factorial(h(j3 + m3))
                * factorial(h(j3 - m3)),
        );
    let kmin = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let kmax = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(h(j1 + j2 - j3) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j3 - j2 + m1) + k)
            * factorial(h(j3 - j1 - m2) + k);
        sum += parity(k) / BigRational::from_integer(den);
    }
    sum *= parity(h(j1 - j2 - m3));
    finish(sq, sum)
}

/// ```text
/// { j1 j2 j3 }
/// { j4 j5 j6 }
/// ```
pub fn wigner6j(j1: f64, j2: f64, j3: f64, j4: f64, j5: f64, j6: f64) -> f64 {
    let v: Option<Vec<i64>> = [j1, j2, j3, j4, j5, j6].map(twice).into_iter().collect();
    let Some(v) = v else {
        log::debug!("6j symbol with non half-integer argument");
        return 0.0;
    };
    wigner6j_twice([v[0], v[1], v[2], v[3], v[4], v[5]])
}

pub(crate) fn wigner6j_twice([a, b, c, d, e, f]: [i64; 6]) -> f64 {
    let triads = [(a, b, c), (a, e, f), (d, b, f), (d, e, c)];
    if !triads.iter().all(|&(x, y, z)| triangle(x, y, z)) {
        return 0.0;
    }
    let sq = triads.iter().fold(BigRational::one(), |acc, &(x, y, z)| acc * delta_sq(x, y, z));
    let h = |x: i64| x / 2;
    let sums = triads.map(|(x, y, z)| h(x + y + z));
    let pairs = [h(a + b + d + e), h(a + c + d + f), h(b + c + e + f)];
    let kmin = *sums.iter().max().unwrap();
    let kmax = *pairs.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let mut den = BigInt::one();
        for s in sums {
            den *= factorial(k - s);
        }
        for p in pairs {
            den *= factorial(p - k);
        }
        sum += parity(k) * BigRational::new(factorial(k + 1), den);
    }
    finish(sq, sum)
}

/// `<j1 m1; j2 m2 | J M>`
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
    let w = wigner3j(j1, j2, j, m1, m2, -m);
    if w == 0.0 {
        return 0.0;
    }
    let phase = if twice(j1 - j2 + m).map_or(0, |t| t / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * (2.0 * j + 1.0).sqrt() * w
}
