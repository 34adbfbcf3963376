//! Special functions needed by the parametric amplitude gain.
//!
//! Only what the gain formula reaches is provided: Γ on the positive axis and
//! Kummer's confluent hypergeometric function `M(a, 1; z)` for `z ≤ 0`.
//! The modified Bessel functions `I₀`, `I₁` exist to cross-check the
//! MMSE-STSA special case, which has a closed Bessel form.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Evaluation controls for [`kummer_m`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerEvalPolicy {
    /// Hard limit on ascending-series terms before reporting non-convergence.
    pub series_term_cap: usize,
    /// Relative size of the last retained term.
    pub series_tolerance: f64,
    /// `|z|` above which the large-argument expansion is tried first.
    pub asymptotic_switch_threshold: f64,
}

impl Default for KummerEvalPolicy {
    fn default() -> Self {
        Self {
            series_term_cap: 600,
            series_tolerance: 1e-16,
            asymptotic_switch_threshold: 30.0,
        }
    }
}

impl KummerEvalPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tolerance > 0.0 && self.series_tolerance <= 1e-8) {
            return Err(Error::config(format!(
                "series_tolerance must lie in (0, 1e-8], got {}",
                self.series_tolerance
            )));
        }
        if self.series_term_cap < 200 {
            return Err(Error::config(format!(
                "series_term_cap must be at least 200, got {}",
                self.series_term_cap
            )));
        }
        if !(self.asymptotic_switch_threshold > 0.0) {
            return Err(Error::config(
                "asymptotic_switch_threshold must be positive",
            ));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for any real `x` that is not a pole (Lanczos with reflection).
fn gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_real(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Γ(x) for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "gamma_fn",
            format!("argument must be positive and finite, got {x}"),
        ));
    }
    if x > 171.6 {
        return Err(Error::domain("gamma_fn", format!("Γ({x}) overflows f64")));
    }
    // Integers up to 20 are returned exactly.
    if x.fract() == 0.0 && x <= 21.0 {
        return Ok((1..x as u64).map(|k| k as f64).product());
    }
    Ok(gamma_real(x))
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Neumaier compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Kummer's function `M(a, 1; z)` for `z ≤ 0`.
///
/// Evaluated through `M(a, 1; -x) = e^{-x} M(1 - a, 1; x)`: for `a < 1` the
/// transformed ascending series has only positive terms. Beyond the switch
/// threshold the large-argument expansion
/// `x^{-a} / Γ(1 - a) · Σ (a)_s² / s! · x^{-s}` is used when both its
/// truncation error and the neglected `e^{-x}` contribution are negligible;
/// otherwise the series is summed regardless of `x`.
pub fn kummer_m(a: f64, z: f64, policy: &KummerEvalPolicy) -> Result<f64> {
    policy.validate()?;
    if !a.is_finite() || !z.is_finite() {
        return Err(Error::domain(
            "kummer_m",
            format!("non-finite argument (a = {a}, z = {z})"),
        ));
    }
    if z > 0.0 {
        return Err(Error::domain(
            "kummer_m",
            format!("z must be non-positive, got {z}"),
        ));
    }
    if a.abs() > 50.0 {
        return Err(Error::domain(
            "kummer_m",
            format!("|a| must not exceed 50, got {a}"),
        ));
    }
    if a == 0.0 || z == 0.0 {
        return Ok(1.0);
    }
    let x = -z;
    let c = 1.0 - a;
    if is_nonpositive_integer(c) {
        // Transformed series terminates after 1 - c terms.
        return Ok(transformed_series(c, x, policy, Some((-c) as usize + 1)));
    }
    if x > policy.asymptotic_switch_threshold {
        if let Some(v) = large_argument(a, x) {
            return Ok(v);
        }
    }
    let v = transformed_series(c, x, policy, None);
    if v.is_nan() {
        return Err(Error::NoConvergence {
            func: "kummer_m",
            a,
            z,
            terms: policy.series_term_cap,
        });
    }
    Ok(v)
}

/// Shorthand for [`kummer_m`] under the default policy.
pub fn kummer_m1(a: f64, z: f64) -> Result<f64> {
    kummer_m(a, z, &KummerEvalPolicy::default())
}

/// `e^{-x} Σ (c)_n x^n / (n!)²`; returns NaN on non-convergence.
fn transformed_series(
    c: f64,
    x: f64,
    policy: &KummerEvalPolicy,
    exact_terms: Option<usize>,
) -> f64 {
    // e^{-x} is folded into the first term so the partial sums never
    // approach e^{x}.
    let mut term = (-x).exp();
    let mut acc = CompensatedSum::default();
    acc.add(term);
    let cap = exact_terms.unwrap_or(policy.series_term_cap);
    for n in 0..cap {
        let nf = n as f64;
        term *= (c + nf) * x / ((nf + 1.0) * (nf + 1.0));
        acc.add(term);
        if exact_terms.is_some() {
            continue;
        }
        // Past the sign changes and past the peak the terms fall geometrically.
        let past_sign_changes = c + nf + 1.0 > 0.0;
        let decreasing = (c + nf + 1.0).abs() * x < (nf + 2.0) * (nf + 2.0);
        if past_sign_changes
            && decreasing
            && term.abs() <= policy.series_tolerance * acc.value().abs()
        {
            return acc.value();
        }
    }
    if exact_terms.is_some() {
        acc.value()
    } else {
        f64::NAN
    }
}

/// Ten-term large-argument expansion, or `None` if it would not reach
/// `1e-12` relative accuracy at this `x`.
fn large_argument(a: f64, x: f64) -> Option<f64> {
    const TERMS: usize = 10;
    const ACCURACY: f64 = 1e-12;
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 0..TERMS - 1 {
        let sf = s as f64;
        term *= (a + sf) * (a + sf) / ((sf + 1.0) * x);
        sum += term;
    }
    let sf = (TERMS - 1) as f64;
    let next = term * (a + sf) * (a + sf) / ((sf + 1.0) * x);
    if next.abs() > ACCURACY * sum.abs() {
        return None;
    }
    let inv_gamma_c = 1.0 / gamma_real(1.0 - a);
    let algebraic = x.powf(-a) * inv_gamma_c * sum;
    // Size of the exponentially small part that the expansion drops.
    let dropped = (-x).exp() * x.powf(a - 1.0) / gamma_real(a).abs();
    if !(dropped <= ACCURACY * algebraic.abs()) {
        return None;
    }
    Some(algebraic)
}

/// `I₀(x)`, `x ≥ 0`.
pub fn bessel_i0(x: f64) -> f64 {
    bessel_i0e(x) * x.exp()
}

/// `I₁(x)`, `x ≥ 0`.
pub fn bessel_i1(x: f64) -> f64 {
    bessel_i1e(x) * x.exp()
}

const BESSEL_SERIES_LIMIT: f64 = 25.0;

/// Exponentially scaled `e^{-x} I₀(x)`.
pub fn bessel_i0e(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i0e requires x >= 0");
    if x <= BESSEL_SERIES_LIMIT {
        bessel_series(0, x) * (-x).exp()
    } else {
        bessel_asymptotic_scaled(0, x)
    }
}

/// Exponentially scaled `e^{-x} I₁(x)`.
pub fn bessel_i1e(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i1e requires x >= 0");
    if x <= BESSEL_SERIES_LIMIT {
        bessel_series(1, x) * (-x).exp()
    } else {
        bessel_asymptotic_scaled(1, x)
    }
}

/// `Σ (x/2)^{2k+ν} / (k! (k+ν)!)`.
fn bessel_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `e^{-x} I_ν(x) ≈ (2πx)^{-1/2} Σ (-1)^k a_k(ν) / x^k`.
fn bessel_asymptotic_scaled(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (kf * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}
