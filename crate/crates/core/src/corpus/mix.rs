//! Mixing clean speech with noise at an active-speech-level SNR.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::p56::{active_speech_level, activity_mask};
use super::resample::resample_to;
use super::wav::read_wav;
use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Default noise-only lead-in (ms).
pub const DEFAULT_LEAD_NOISE_MS: f64 = 300.0;
/// One modulation window; the minimum lead-in when the modulation path runs.
pub const MIN_LEAD_FOR_MODULATION_MS: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOffsetPolicy {
    Fixed(usize),
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub clean_path: PathBuf,
    pub noise_path: PathBuf,
    pub snr_db: f64,
    pub noise_offset_policy: NoiseOffsetPolicy,
    pub lead_noise_ms: f64,
    /// Both signals are brought to this rate before mixing.
    pub sample_rate_hz: f64,
}

impl MixSpec {
    pub fn new(
        clean_path: impl Into<PathBuf>,
        noise_path: impl Into<PathBuf>,
        snr_db: f64,
        seed: u64,
    ) -> Self {
        Self {
            clean_path: clean_path.into(),
            noise_path: noise_path.into(),
            snr_db,
            noise_offset_policy: NoiseOffsetPolicy::SeededRandom(seed),
            lead_noise_ms: DEFAULT_LEAD_NOISE_MS,
            sample_rate_hz: 16000.0,
        }
    }

    /// `for_modulation` demands enough lead-in for one modulation window.
    pub fn validate(&self, for_modulation: bool) -> Result<()> {
        validate_mix(self.snr_db, self.lead_noise_ms, for_modulation)?;
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config("mix: sample_rate_hz must be positive"));
        }
        Ok(())
    }
}

fn validate_mix(snr_db: f64, lead_noise_ms: f64, for_modulation: bool) -> Result<()> {
    if !snr_db.is_finite() {
        return Err(Error::config(format!(
            "mix: snr_db must be finite, got {snr_db}"
        )));
    }
    if !(lead_noise_ms >= 0.0 && lead_noise_ms.is_finite()) {
        return Err(Error::config("mix: lead_noise_ms must be non-negative"));
    }
    if for_modulation && lead_noise_ms < MIN_LEAD_FOR_MODULATION_MS {
        return Err(Error::config(format!(
            "mix: lead_noise_ms >= {MIN_LEAD_FOR_MODULATION_MS} required by the modulation path, got {lead_noise_ms}"
        )));
    }
    Ok(())
}

/// The three aligned signals of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub noisy: Waveform,
    /// Clean speech delayed by the lead-in (zeros before it).
    pub clean: Waveform,
    pub noise: Waveform,
    pub lead_samples: usize,
    pub noise_offset: usize,
}

/// Active-span SNR: clean ASL against the noise power where the clean
/// signal is active.
pub fn active_span_snr_db(clean: &Waveform, noise: &Waveform) -> Result<f64> {
    if clean.len() != noise.len() {
        return Err(Error::shape(
            format!("{} samples", clean.len()),
            format!("{} samples", noise.len()),
        ));
    }
    let level = active_speech_level(clean)?;
    Ok(level.asl_db - 10.0 * active_noise_power(clean, noise, level.threshold)?.log10())
}

fn active_noise_power(clean: &Waveform, noise: &Waveform, threshold: f64) -> Result<f64> {
    let mask = activity_mask(clean, threshold);
    let (sum, n) = mask
        .iter()
        .zip(noise.samples())
        .filter(|(m, _)| **m)
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v * v, n + 1));
    if n == 0 || sum == 0.0 {
        return Err(Error::Input(
            "noise has no power over the active speech span".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Mixes in-memory signals of equal sample rate.
pub fn mix_signals(
    clean: &Waveform,
    noise: &Waveform,
    snr_db: f64,
    policy: NoiseOffsetPolicy,
    lead_noise_ms: f64,
) -> Result<Mixture> {
    validate_mix(snr_db, lead_noise_ms, false)?;
    let fs = clean.sample_rate_hz();
    if noise.sample_rate_hz() != fs {
        return Err(Error::Input(format!(
            "sample rates differ: clean {fs} Hz, noise {} Hz",
            noise.sample_rate_hz()
        )));
    }
    let lead = (lead_noise_ms * 1e-3 * fs).round() as usize;
    let total = lead + clean.len();
    if noise.len() < total {
        return Err(Error::Input(format!(
            "noise too short: {} samples, need {total} ({} clean + {lead} lead-in)",
            noise.len(),
            clean.len()
        )));
    }
    let slack = noise.len() - total;
    let offset = match policy {
        NoiseOffsetPolicy::Fixed(o) if o <= slack => o,
        NoiseOffsetPolicy::Fixed(o) => {
            return Err(Error::Input(format!(
                "noise offset {o} exceeds the available {slack} samples"
            )))
        }
        NoiseOffsetPolicy::SeededRandom(seed) => {
            ChaCha8Rng::seed_from_u64(seed).random_range(0..=slack)
        }
    };

    let mut aligned = vec![0.0; lead];
    aligned.extend_from_slice(clean.samples());
    let aligned = clean.with_samples(aligned)?;
    let segment = noise.with_samples(noise.samples()[offset..offset + total].to_vec())?;

    let level = active_speech_level(&aligned)?;
    let noise_power = active_noise_power(&aligned, &segment, level.threshold)?;
    let gain = 10f64.powf((level.asl_db - snr_db - 10.0 * noise_power.log10()) / 20.0);
    let scaled = segment.with_samples(segment.samples().iter().map(|v| v * gain).collect())?;
    let noisy = aligned.with_samples(
        aligned
            .samples()
            .iter()
            .zip(scaled.samples())
            .map(|(s, n)| s + n)
            .collect(),
    )?;
    Ok(Mixture {
        noisy,
        clean: aligned,
        noise: scaled,
        lead_samples: lead,
        noise_offset: offset,
    })
}

/// Reads, resamples and mixes the files named by `spec`.
pub fn mix_at_snr(spec: &MixSpec) -> Result<Mixture> {
    spec.validate(false)?;
    let clean = resample_to(&read_wav(&spec.clean_path)?, spec.sample_rate_hz)?;
    let noise = resample_to(&read_wav(&spec.noise_path)?, spec.sample_rate_hz)?;
    mix_signals(
        &clean,
        &noise,
        spec.snr_db,
        spec.noise_offset_policy,
        spec.lead_noise_ms,
    )
}
