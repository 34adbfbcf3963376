//! Closed-form gain of the parametric Bayesian amplitude estimator.
//!
//! With cost `((A^β − Â^β)/A^α)²` and a generalized-Gamma (κ = 2) amplitude
//! prior, the estimate is `Â = G·R` with
//!
//! ```text
//! G = √ν/γ · [ Γ(β/2 + μ − α) M((2−β)/2 + α − μ, 1; −ν)
//!            / ( Γ(μ − α)      M(1 + α − μ,       1; −ν) ) ]^{1/β}
//! ```
//!
//! where ζ, γ are the a-priori and a-posteriori SNRs and ν depends on the
//! chosen [`PriorScale`].

use super::params::{Prefactor, PriorScale, StsaParams};
use crate::error::{Error, Result};
use crate::specfun::{gamma_fn, kummer_m, KummerEvalPolicy};

/// Smallest a-posteriori SNR fed to the formula; `G ~ γ^{-1/2}` below it.
pub const GAMMA_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainOptions {
    pub prior_scale: PriorScale,
    pub prefactor: Prefactor,
}

impl From<&StsaParams> for GainOptions {
    fn from(p: &StsaParams) -> Self {
        Self {
            prior_scale: p.prior_scale,
            prefactor: p.prefactor,
        }
    }
}

/// ν for the given prior scaling.
pub fn nu(zeta: f64, gamma: f64, mu: f64, scale: PriorScale) -> f64 {
    match scale {
        PriorScale::Fixed => zeta / (1.0 + zeta) * gamma,
        PriorScale::MomentMatched => zeta / (mu + zeta) * gamma,
    }
}

/// Gain under the default options.
pub fn gain(zeta: f64, gamma: f64, alpha: f64, beta: f64, mu: f64) -> Result<f64> {
    gain_with(zeta, gamma, alpha, beta, mu, GainOptions::default())
}

pub fn gain_with(
    zeta: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    opts: GainOptions,
) -> Result<f64> {
    check_domain(zeta, gamma, alpha, beta, mu)?;
    let gamma = gamma.max(GAMMA_MIN);
    let nu = nu(zeta, gamma, mu, opts.prior_scale);
    let bracket = moment_ratio(nu, alpha, beta, mu)?;
    let prefactor = match opts.prefactor {
        Prefactor::Corrected => nu.sqrt() / gamma,
        Prefactor::PaperLiteral => (gamma / (mu / zeta + 1.0)).sqrt(),
    };
    let g = prefactor * bracket.powf(1.0 / beta);
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::domain(
            "gain",
            format!("non-finite or non-positive gain {g} (ζ = {zeta}, γ = {gamma}, α = {alpha}, β = {beta}, μ = {mu})"),
        ));
    }
    Ok(g)
}

fn check_domain(zeta: f64, gamma: f64, alpha: f64, beta: f64, mu: f64) -> Result<()> {
    let all_finite = [zeta, gamma, alpha, beta, mu].iter().all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::domain("gain", "non-finite argument"));
    }
    if !(zeta > 0.0) {
        return Err(Error::domain(
            "gain",
            format!("ζ must be positive, got {zeta}"),
        ));
    }
    if gamma < 0.0 {
        return Err(Error::domain(
            "gain",
            format!("γ must be non-negative, got {gamma}"),
        ));
    }
    if !(beta > 0.0) {
        return Err(Error::domain(
            "gain",
            format!("β must be positive, got {beta}"),
        ));
    }
    if !(mu - alpha > 0.0) {
        return Err(Error::domain(
            "gain",
            format!("μ − α must be positive (μ = {mu}, α = {alpha})"),
        ));
    }
    if !(beta / 2.0 + mu - alpha > 0.0) {
        return Err(Error::domain("gain", "β/2 + μ − α must be positive"));
    }
    Ok(())
}

/// `Γ(β/2+μ−α) M(a₁,1;−ν) / (Γ(μ−α) M(a₂,1;−ν))`.
fn moment_ratio(nu: f64, alpha: f64, beta: f64, mu: f64) -> Result<f64> {
    let policy = KummerEvalPolicy::default();
    let a1 = (2.0 - beta) / 2.0 + alpha - mu;
    let a2 = 1.0 + alpha - mu;
    let m1 = kummer_m(a1, -nu, &policy)?;
    let m2 = kummer_m(a2, -nu, &policy)?;
    let g1 = gamma_fn(beta / 2.0 + mu - alpha)?;
    let g2 = gamma_fn(mu - alpha)?;
    Ok(g1 * m1 / (g2 * m2))
}
