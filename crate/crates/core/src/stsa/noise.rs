//! Noise power spectral density tracking.
//!
//! Two sources: an oracle that smooths the periodogram of the true noise
//! (available whenever the mixture was synthesised here), and a blind
//! speech-presence-probability weighted recursive MMSE tracker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;

/// Lower bound on every PSD value.
pub const PSD_FLOOR: f64 = 1e-10;

/// Recursive smoothing of the oracle periodogram.
pub const ORACLE_SMOOTHING: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePsdMode {
    #[default]
    Oracle,
    Blind,
}

/// Settings of the blind tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppTrackerParams {
    /// Fixed a-priori probability of speech presence.
    pub prior_speech_prob: f64,
    /// Fixed a-priori SNR assumed under speech presence (dB).
    pub speech_snr_db: f64,
    /// Recursive smoothing of the noise estimate.
    pub noise_smoothing: f64,
    /// Recursive smoothing of the speech presence probability.
    pub spp_smoothing: f64,
    /// Smoothed SPP level regarded as "stuck".
    pub stuck_level: f64,
    /// Consecutive stuck frames before a full update is forced.
    pub stuck_frames: usize,
    /// Frames averaged to initialise the estimate.
    pub init_frames: usize,
}

impl Default for SppTrackerParams {
    fn default() -> Self {
        Self {
            prior_speech_prob: 0.5,
            speech_snr_db: 15.0,
            noise_smoothing: 0.8,
            spp_smoothing: 0.9,
            stuck_level: 0.99,
            stuck_frames: 50,
            init_frames: 5,
        }
    }
}

/// Recursively smoothed true-noise periodogram.
pub fn oracle_noise_psd(noise_power: &RealGrid) -> RealGrid {
    let (frames, bins) = noise_power.shape();
    let mut out = RealGrid::filled(frames, bins, PSD_FLOOR);
    for p in 0..frames {
        for k in 0..bins {
            let cur = *noise_power.get(p, k);
            let v = if p == 0 {
                cur
            } else {
                ORACLE_SMOOTHING * *out.get(p - 1, k) + (1.0 - ORACLE_SMOOTHING) * cur
            };
            *out.get_mut(p, k) = v.max(PSD_FLOOR);
        }
    }
    out
}

/// SPP-weighted MMSE noise tracker over a noisy periodogram.
pub fn blind_noise_psd(noisy_power: &RealGrid, params: &SppTrackerParams) -> RealGrid {
    let (frames, bins) = noisy_power.shape();
    let mut out = RealGrid::filled(frames, bins, PSD_FLOOR);
    if frames == 0 {
        return out;
    }
    let xi_h1 = 10f64.powf(params.speech_snr_db / 10.0);
    let prior_ratio = (1.0 - params.prior_speech_prob) / params.prior_speech_prob;
    let init = params.init_frames.clamp(1, frames);

    let mut sigma2: Vec<f64> = (0..bins)
        .map(|k| {
            let mean = (0..init).map(|p| *noisy_power.get(p, k)).sum::<f64>() / init as f64;
            mean.max(PSD_FLOOR)
        })
        .collect();
    let mut spp_smoothed = vec![0.5; bins];
    let mut stuck_run = vec![0usize; bins];

    for p in 0..frames {
        for k in 0..bins {
            let y2 = *noisy_power.get(p, k);
            let post = y2 / sigma2[k];
            let exponent = (-post * xi_h1 / (1.0 + xi_h1)).max(-700.0);
            let mut spp = 1.0 / (1.0 + prior_ratio * (1.0 + xi_h1) * exponent.exp());
            spp_smoothed[k] =
                params.spp_smoothing * spp_smoothed[k] + (1.0 - params.spp_smoothing) * spp;
            if spp_smoothed[k] > params.stuck_level {
                stuck_run[k] += 1;
                spp = spp.min(params.stuck_level);
            } else {
                stuck_run[k] = 0;
            }
            if stuck_run[k] >= params.stuck_frames {
                spp = 0.0;
                stuck_run[k] = 0;
            }
            let noise_mmse = (1.0 - spp) * y2 + spp * sigma2[k];
            sigma2[k] = (params.noise_smoothing * sigma2[k]
                + (1.0 - params.noise_smoothing) * noise_mmse)
                .max(PSD_FLOOR);
            *out.get_mut(p, k) = sigma2[k];
        }
    }
    out
}

/// Dispatch on `mode`. Oracle mode needs the true noise periodogram.
pub fn noise_psd_update(
    noisy_power: &RealGrid,
    mode: NoisePsdMode,
    noise_power: Option<&RealGrid>,
) -> Result<RealGrid> {
    match mode {
        NoisePsdMode::Oracle => {
            let noise = noise_power.ok_or_else(|| {
                Error::Input("oracle noise PSD mode requires a noise reference".into())
            })?;
            noise.ensure_shape(noisy_power.rows(), noisy_power.cols())?;
            Ok(oracle_noise_psd(noise))
        }
        NoisePsdMode::Blind => Ok(blind_noise_psd(noisy_power, &SppTrackerParams::default())),
    }
}
