use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the amplitude prior's scale relates to the a-priori SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorScale {
    /// `λ = 1/σ_s²`, giving `ν = ζγ/(1+ζ)`. The gain rises with the shape
    /// parameter μ at every SNR.
    #[default]
    Fixed,
    /// `λ = μ/σ_s²` (prior second moment pinned to `σ_s²`), giving
    /// `ν = ζγ/(μ+ζ)`.
    MomentMatched,
}

/// Leading factor of the closed-form gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `√ν/γ`; reduces to the Ephraim–Malah gain at α=0, β=1, μ=1.
    #[default]
    Corrected,
    /// `√(γ/(μ/ζ + 1))`, which equals `√ν` under
    /// [`PriorScale::MomentMatched`]. Off from `Corrected` by a factor γ.
    PaperLiteral,
}

/// Parameters of the acoustic-domain estimator and its schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StsaParams {
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub beta_low: f64,
    pub beta_high: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Tonotopic constant of the β schedule (Hz).
    pub tonotopic_q: f64,
    pub tonotopic_l: f64,
    /// Decision-directed weight on the previous frame's estimate.
    pub dd_smoothing: f64,
    /// Lower bound on the a-priori SNR (linear).
    pub zeta_floor: f64,
    /// dB range mapped onto `ζ_norm ∈ [0, 1]`.
    pub zeta_norm_range_db: (f64, f64),
    pub prior_scale: PriorScale,
    pub prefactor: Prefactor,
}

impl Default for StsaParams {
    fn default() -> Self {
        Self {
            alpha_low: 0.0,
            alpha_high: 0.5,
            beta_low: 0.2,
            beta_high: 1.0,
            mu_min: 1.0,
            mu_max: 3.0,
            tonotopic_q: 16.54,
            tonotopic_l: 1.0,
            dd_smoothing: 0.98,
            zeta_floor: 10f64.powf(-25.0 / 10.0),
            zeta_norm_range_db: (-15.0, 20.0),
            prior_scale: PriorScale::Fixed,
            prefactor: Prefactor::Corrected,
        }
    }
}

impl StsaParams {
    /// Checks every invariant, including that all scheduled (α, β, μ)
    /// triples keep the Gamma-function arguments of the gain positive.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.alpha_low,
            self.alpha_high,
            self.beta_low,
            self.beta_high,
            self.mu_min,
            self.mu_max,
            self.tonotopic_q,
            self.tonotopic_l,
            self.dd_smoothing,
            self.zeta_floor,
            self.zeta_norm_range_db.0,
            self.zeta_norm_range_db.1,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::config("stsa: all parameters must be finite"));
        }
        if self.mu_min < 1.0 {
            return Err(Error::config(format!(
                "stsa: mu_min >= 1 violated ({})",
                self.mu_min
            )));
        }
        if self.mu_max < self.mu_min {
            return Err(Error::config("stsa: mu_max >= mu_min violated"));
        }
        if !(self.beta_low > 0.0) {
            return Err(Error::config("stsa: beta_low > 0 violated"));
        }
        if self.beta_high < self.beta_low {
            return Err(Error::config("stsa: beta_high >= beta_low violated"));
        }
        if self.alpha_high < self.alpha_low {
            return Err(Error::config("stsa: alpha_high >= alpha_low violated"));
        }
        if !(self.tonotopic_q > 0.0) {
            return Err(Error::config("stsa: tonotopic_q > 0 violated"));
        }
        if self.tonotopic_l < 1.0 {
            return Err(Error::config("stsa: tonotopic_l >= 1 violated"));
        }
        if !(self.dd_smoothing > 0.0 && self.dd_smoothing < 1.0) {
            return Err(Error::config("stsa: dd_smoothing must lie in (0, 1)"));
        }
        if !(self.zeta_floor > 0.0) {
            return Err(Error::config("stsa: zeta_floor > 0 violated"));
        }
        if !(self.zeta_norm_range_db.0 < self.zeta_norm_range_db.1) {
            return Err(Error::config(
                "stsa: zeta_norm_range_db low < high violated",
            ));
        }
        // α is largest and μ, β smallest at the schedule extremes.
        let alpha_max = self.alpha_high.max(self.alpha_low);
        if !(self.mu_min - alpha_max > 0.0) {
            return Err(Error::config(format!(
                "stsa: gamma-domain safety mu_min - alpha > 0 violated (mu_min = {}, alpha = {alpha_max})",
                self.mu_min
            )));
        }
        if !(self.beta_low / 2.0 + self.mu_min - alpha_max > 0.0) {
            return Err(Error::config(
                "stsa: gamma-domain safety beta/2 + mu_min - alpha > 0 violated",
            ));
        }
        Ok(())
    }
}
