//! SNR-weighted fusion of the acoustic and modulation magnitude estimates.

use serde::{Deserialize, Serialize};

use crate::dsp::{istft, recombine, Spectrogram, Waveform};
use crate::error::{Error, Result};
use crate::grid::RealGrid;

/// Floor on `γ − 1` before taking the log.
pub const PSI_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityMode {
    /// `floor + (ceil − floor)(ψ − low)/(high − low)` between the breaks.
    #[default]
    Continuous,
    /// `(ψ − low)/(high − low)` between the breaks, unscaled. Jumps at
    /// both breakpoints.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrScope {
    /// One ψ per frame from the frame-mean γ.
    #[default]
    PerFrame,
    PerBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub low_break_db: f64,
    pub high_break_db: f64,
    pub weight_floor: f64,
    pub weight_ceil: f64,
    pub continuity_mode: ContinuityMode,
    pub snr_scope: SnrScope,
    /// Overrides Φ everywhere when set. Used to check that the fused path
    /// collapses onto the single-path modes.
    #[serde(skip)]
    pub forced_weight: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            low_break_db: 2.0,
            high_break_db: 16.0,
            weight_floor: 0.2,
            weight_ceil: 0.8,
            continuity_mode: ContinuityMode::Continuous,
            snr_scope: SnrScope::PerFrame,
            forced_weight: None,
        }
    }
}

impl FusionConfig {
    pub fn with_forced_weight(weight: f64) -> Self {
        Self {
            forced_weight: Some(weight),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.low_break_db,
            self.high_break_db,
            self.weight_floor,
            self.weight_ceil,
        ];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::config("fusion: all parameters must be finite"));
        }
        if !(self.weight_floor < self.weight_ceil) {
            return Err(Error::config(format!(
                "fusion: weight_floor < weight_ceil violated ({} >= {})",
                self.weight_floor, self.weight_ceil
            )));
        }
        if !(self.low_break_db < self.high_break_db) {
            return Err(Error::config(format!(
                "fusion: low_break_db < high_break_db violated ({} >= {})",
                self.low_break_db, self.high_break_db
            )));
        }
        if !(0.0..=1.0).contains(&self.weight_floor) || !(0.0..=1.0).contains(&self.weight_ceil) {
            return Err(Error::config("fusion: weights must lie in [0, 1]"));
        }
        if let Some(w) = self.forced_weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(format!(
                    "fusion: forced weight {w} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// `10·log10(max(γ − 1, ε))`.
pub fn psi_db(gamma: f64) -> f64 {
    10.0 * (gamma - 1.0).max(PSI_EPSILON).log10()
}

/// ψ of one frame given its per-bin γ.
pub fn instantaneous_snr_db(gamma_row: &[f64]) -> f64 {
    if gamma_row.is_empty() {
        return psi_db(1.0);
    }
    psi_db(gamma_row.iter().sum::<f64>() / gamma_row.len() as f64)
}

/// ψ over an utterance: `frames × 1` for per-frame scope, else `frames × bins`.
pub fn psi_grid(gamma: &RealGrid, scope: SnrScope) -> RealGrid {
    match scope {
        SnrScope::PerFrame => {
            RealGrid::from_fn(gamma.rows(), 1, |p, _| instantaneous_snr_db(gamma.row(p)))
        }
        SnrScope::PerBin => gamma.map(|&g| psi_db(g)),
    }
}

/// Fusion weight Φ(ψ).
pub fn fusion_weight(psi_db: f64, cfg: &FusionConfig) -> f64 {
    if let Some(w) = cfg.forced_weight {
        return w;
    }
    let (lo, hi) = (cfg.low_break_db, cfg.high_break_db);
    if psi_db <= lo || psi_db.is_nan() {
        return cfg.weight_floor;
    }
    if psi_db >= hi {
        return cfg.weight_ceil;
    }
    let t = (psi_db - lo) / (hi - lo);
    match cfg.continuity_mode {
        ContinuityMode::Continuous => cfg.weight_floor + (cfg.weight_ceil - cfg.weight_floor) * t,
        ContinuityMode::PaperLiteral => t,
    }
}

/// `Ŝ = Φ(ψ)·Ŝ_A + (1 − Φ(ψ))·Ŝ_M`. `psi` has one column (per frame) or
/// one per bin.
pub fn fuse(
    s_a: &RealGrid,
    s_m: &RealGrid,
    psi: &RealGrid,
    cfg: &FusionConfig,
) -> Result<RealGrid> {
    let (frames, bins) = s_a.shape();
    s_m.ensure_shape(frames, bins)?;
    if psi.rows() != frames || !(psi.cols() == 1 || psi.cols() == bins) {
        return Err(Error::shape(
            format!("{frames} x 1 or {frames} x {bins} ψ values"),
            format!("{} x {}", psi.rows(), psi.cols()),
        ));
    }
    Ok(RealGrid::from_fn(frames, bins, |p, k| {
        let ps = if psi.cols() == 1 {
            *psi.get(p, 0)
        } else {
            *psi.get(p, k)
        };
        let w = fusion_weight(ps, cfg);
        let (a, m) = (*s_a.get(p, k), *s_m.get(p, k));
        if a == m {
            return a;
        }
        // Rounding must not push the blend outside its inputs.
        (w * a + (1.0 - w) * m).clamp(a.min(m), a.max(m))
    }))
}

/// Fused magnitudes with the noisy phase, back to a waveform.
pub fn synthesize(
    fused_mag: &RealGrid,
    noisy_phase: &RealGrid,
    like: &Spectrogram,
) -> Result<Waveform> {
    istft(&recombine(fused_mag, noisy_phase, like)?)
}
