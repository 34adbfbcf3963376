//! Frequency- and SNR-dependent estimator parameters.

use super::params::StsaParams;
use crate::error::{Error, Result};

/// Frequency above which α starts to grow.
const ALPHA_KNEE_HZ: f64 = 2000.0;

fn check_freq(f_k: f64, f_s: f64) -> Result<()> {
    if !(f_s > 0.0) {
        return Err(Error::Input(format!(
            "sample rate must be positive, got {f_s}"
        )));
    }
    // Tolerate round-off at the Nyquist bin.
    if !(f_k >= 0.0 && f_k <= f_s / 2.0 * (1.0 + 1e-12)) {
        return Err(Error::Input(format!(
            "frequency {f_k} Hz outside [0, {}] Hz",
            f_s / 2.0
        )));
    }
    Ok(())
}

/// α_k: constant up to 2 kHz, then linear up to `α_high` at Nyquist.
pub fn alpha_schedule(f_k: f64, f_s: f64, p: &StsaParams) -> Result<f64> {
    check_freq(f_k, f_s)?;
    let nyquist = f_s / 2.0;
    if f_k <= ALPHA_KNEE_HZ || nyquist <= ALPHA_KNEE_HZ {
        return Ok(p.alpha_low);
    }
    let f_k = f_k.min(nyquist);
    Ok(
        (f_k - ALPHA_KNEE_HZ) * (p.alpha_high - p.alpha_low) / (nyquist - ALPHA_KNEE_HZ)
            + p.alpha_low,
    )
}

/// β_k following a logarithmic tonotopic map of the basilar membrane.
pub fn beta_schedule(f_k: f64, f_s: f64, p: &StsaParams) -> Result<f64> {
    check_freq(f_k, f_s)?;
    if p.tonotopic_l < 1.0 {
        return Err(Error::Input(format!(
            "tonotopic_l must be >= 1, got {}",
            p.tonotopic_l
        )));
    }
    let f_k = f_k.min(f_s / 2.0);
    let q = p.tonotopic_q;
    let l = p.tonotopic_l;
    let bracket = (f_k / q + l).log10() / (f_s / (2.0 * q) + l).log10();
    Ok(bracket * (p.beta_high - p.beta_low) + p.beta_low)
}

/// μ for a frame from its normalised a-priori SNR (clamped to `[0, 1]`).
pub fn mu_schedule(zeta_norm: f64, p: &StsaParams) -> f64 {
    let z = if zeta_norm.is_nan() {
        0.0
    } else {
        zeta_norm.clamp(0.0, 1.0)
    };
    p.mu_min + (p.mu_max - p.mu_min) * z
}

/// Affine map of a frame-mean SNR in dB from `range` onto `[0, 1]`.
pub fn normalize_frame_snr(zeta_frame_mean_db: f64, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    ((zeta_frame_mean_db - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Mean of `10·log10(ζ)` over a frame's bins.
pub fn frame_mean_snr_db(zeta_row: &[f64]) -> f64 {
    if zeta_row.is_empty() {
        return f64::NEG_INFINITY;
    }
    zeta_row.iter().map(|z| 10.0 * z.log10()).sum::<f64>() / zeta_row.len() as f64
}

/// Per-bin α and β for a one-sided spectrum of `num_bins` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSchedule {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BinSchedule {
    pub fn new(num_bins: usize, fft_size: usize, f_s: f64, p: &StsaParams) -> Result<Self> {
        let mut alpha = Vec::with_capacity(num_bins);
        let mut beta = Vec::with_capacity(num_bins);
        for k in 0..num_bins {
            let f = k as f64 * f_s / fft_size as f64;
            alpha.push(alpha_schedule(f, f_s, p)?);
            beta.push(beta_schedule(f, f_s, p)?);
        }
        Ok(Self { alpha, beta })
    }
}
