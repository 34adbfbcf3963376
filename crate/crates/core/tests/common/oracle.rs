//! Reference computations that share no code with the library paths they check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational for a decimal with at most `digits` fractional digits.
pub fn to_rational(x: f64) -> BigRational {
    let scale = 1_000_000i64;
    let num = (x * scale as f64).round() as i64;
    assert!(
        ((num as f64) / scale as f64 - x).abs() < 1e-15,
        "{x} is not a short decimal"
    );
    rational(num, scale)
}

/// `M(a, 1; z)` from the defining alternating series in exact rational
/// arithmetic, truncated once terms fall below `1e-45` in magnitude past the
/// peak.
pub fn kummer_exact(a: f64, z: f64) -> f64 {
    let a = to_rational(a);
    let z = to_rational(z);
    let tiny = rational(1, 1) / BigRational::from_integer(BigInt::from(10).pow(45));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let zabs = z.abs().to_f64().unwrap();
    for n in 0..5000u32 {
        let nn = BigRational::from_integer(BigInt::from(n));
        let np1 = BigRational::from_integer(BigInt::from(n + 1));
        term = term * (&a + &nn) * &z / (&np1 * &np1);
        if term.is_zero() {
            break;
        }
        sum += &term;
        if (n as f64) > zabs + 10.0 && term.abs() < tiny {
            break;
        }
    }
    sum.to_f64().unwrap()
}

/// `I_ν(x)` for ν ∈ {0, 1} by the power series summed in exact rationals.
pub fn bessel_exact(order: u32, x: f64) -> f64 {
    let half = to_rational(x) / rational(2, 1);
    let q = &half * &half;
    let mut term = if order == 0 {
        BigRational::one()
    } else {
        half.clone()
    };
    let mut sum = term.clone();
    let tiny = rational(1, 1) / BigRational::from_integer(BigInt::from(10).pow(40));
    for k in 1..2000u32 {
        let kk = BigRational::from_integer(BigInt::from(k));
        let kn = BigRational::from_integer(BigInt::from(k + order));
        term = term * &q / (kk * kn);
        sum += &term;
        if term < &tiny * &sum {
            break;
        }
    }
    sum.to_f64().unwrap()
}

/// Ephraim–Malah MMSE-STSA gain in Bessel form.
pub fn mmse_stsa_gain(zeta: f64, gamma: f64) -> f64 {
    let nu = zeta / (1.0 + zeta) * gamma;
    let h = nu / 2.0;
    // Scaled Bessel values through the exact series keep e^{-ν/2} I(ν/2) finite.
    let i0e = scaled_bessel(0, h);
    let i1e = scaled_bessel(1, h);
    (std::f64::consts::PI.sqrt() / 2.0) * nu.sqrt() / gamma * ((1.0 + nu) * i0e + nu * i1e)
}

/// `e^{-x} I_ν(x)`, using the series for moderate x and the standard
/// asymptotic expansion (summed in f64) beyond.
pub fn scaled_bessel(order: u32, x: f64) -> f64 {
    if x < 60.0 {
        // The series is exact in rationals, but x is not a short decimal in
        // general; evaluate the series in f64 with long-double-free care.
        let half = x / 2.0;
        let q = half * half;
        let mut term = if order == 0 { 1.0 } else { half };
        let mut sum = term;
        for k in 1..3000 {
            let kf = k as f64;
            term *= q / (kf * (kf + order as f64));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mu = 4.0 * (order * order) as f64;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..40 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}
