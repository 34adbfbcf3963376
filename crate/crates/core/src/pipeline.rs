//! One utterance end to end: STFT, the acoustic and modulation paths,
//! fusion and resynthesis.

use serde::{Deserialize, Serialize};

use crate::dsp::{split_mag_phase, stft, AnalysisConfig, Spectrogram, Waveform};
use crate::error::{Error, Result};
use crate::fusion::{fuse, psi_grid, synthesize, FusionConfig};
use crate::grid::RealGrid;
use crate::modmask::{enhance_mod_ssub, enhance_modulation, ModMaskParams};
use crate::stsa::{
    blind_noise_psd, estimate_track, oracle_noise_psd, BinSchedule, NoisePsdMode, SppTrackerParams,
    StsaParams,
};

/// Acoustic frames per modulation window.
pub const MODULATION_WINDOW_FRAMES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhancementMode {
    #[default]
    Fusion,
    AcousticOnly,
    ModmaskOnly,
    ModssubOnly,
}

impl EnhancementMode {
    pub const ALL: [EnhancementMode; 4] = [
        EnhancementMode::Fusion,
        EnhancementMode::AcousticOnly,
        EnhancementMode::ModmaskOnly,
        EnhancementMode::ModssubOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnhancementMode::Fusion => "fusion",
            EnhancementMode::AcousticOnly => "acoustic_only",
            EnhancementMode::ModmaskOnly => "modmask_only",
            EnhancementMode::ModssubOnly => "modssub_only",
        }
    }
}

/// Everything that controls an enhancement run. Missing keys take defaults
/// when deserialised; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhancementConfig {
    pub acoustic: AnalysisConfig,
    pub modulation: AnalysisConfig,
    pub stsa: StsaParams,
    pub modmask: ModMaskParams,
    pub fusion: FusionConfig,
    pub mode: EnhancementMode,
    pub noise_psd_mode: NoisePsdMode,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        Self {
            acoustic: AnalysisConfig::ACOUSTIC_16K,
            modulation: AnalysisConfig::MODULATION,
            stsa: StsaParams::default(),
            modmask: ModMaskParams::default(),
            fusion: FusionConfig::default(),
            mode: EnhancementMode::Fusion,
            noise_psd_mode: NoisePsdMode::Oracle,
        }
    }
}

impl EnhancementConfig {
    /// Validation at 16 kHz.
    pub fn validate(&self) -> Result<()> {
        self.validate_for(16000.0)
    }

    /// Cross-module validation for input sampled at `sample_rate_hz`.
    pub fn validate_for(&self, sample_rate_hz: f64) -> Result<()> {
        self.acoustic.validate()?;
        self.modulation.validate()?;
        self.stsa.validate()?;
        self.fusion.validate()?;
        if self.modulation.window_len_samples != MODULATION_WINDOW_FRAMES {
            return Err(Error::config(format!(
                "modulation window = {MODULATION_WINDOW_FRAMES} acoustic frames violated (got {})",
                self.modulation.window_len_samples
            )));
        }
        self.modmask.validate(self.frame_rate_hz(sample_rate_hz))?;
        Ok(())
    }

    /// Acoustic frames per second.
    pub fn frame_rate_hz(&self, sample_rate_hz: f64) -> f64 {
        sample_rate_hz / self.acoustic.hop_samples as f64
    }
}

/// The output waveform with the magnitude matrices that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementDetail {
    pub output: Waveform,
    pub noisy_mag: RealGrid,
    /// Ŝ_A, when the acoustic path ran.
    pub acoustic_mag: Option<RealGrid>,
    /// Ŝ_M (or the subtraction magnitudes), when a modulation path ran.
    pub modulation_mag: Option<RealGrid>,
    pub output_mag: RealGrid,
    /// Share of modulation-path magnitudes clamped at zero.
    pub clamped_fraction: f64,
}

pub fn enhance(
    noisy: &Waveform,
    noise_ref: Option<&Waveform>,
    cfg: &EnhancementConfig,
) -> Result<Waveform> {
    enhance_detailed(noisy, noise_ref, cfg).map(|d| d.output)
}

fn acoustic_path(
    spec: &Spectrogram,
    noisy_mag: &RealGrid,
    noise_ref: Option<&Waveform>,
    cfg: &EnhancementConfig,
) -> Result<(RealGrid, RealGrid)> {
    let noise_psd = match cfg.noise_psd_mode {
        NoisePsdMode::Oracle => {
            let n = noise_ref.ok_or_else(|| {
                Error::Input("oracle noise PSD mode needs a noise reference".into())
            })?;
            oracle_noise_psd(&stft(n, &cfg.acoustic)?.power())
        }
        NoisePsdMode::Blind => blind_noise_psd(&spec.power(), &SppTrackerParams::default()),
    };
    let sched = BinSchedule::new(
        spec.num_bins(),
        cfg.acoustic.fft_size,
        spec.sample_rate_hz,
        &cfg.stsa,
    )?;
    let (track, s_a) = estimate_track(noisy_mag, noise_psd, &sched, &cfg.stsa)?;
    Ok((s_a, track.gamma))
}

/// [`enhance`] keeping the intermediate magnitudes.
pub fn enhance_detailed(
    noisy: &Waveform,
    noise_ref: Option<&Waveform>,
    cfg: &EnhancementConfig,
) -> Result<EnhancementDetail> {
    let fs = noisy.sample_rate_hz();
    cfg.validate_for(fs)?;
    if let Some(n) = noise_ref {
        if n.len() != noisy.len() || n.sample_rate_hz() != fs {
            return Err(Error::shape(
                format!("noise reference of {} samples at {fs} Hz", noisy.len()),
                format!("{} samples at {} Hz", n.len(), n.sample_rate_hz()),
            ));
        }
    }
    let spec = stft(noisy, &cfg.acoustic)?;
    let (noisy_mag, phase) = split_mag_phase(&spec);
    let rate = cfg.frame_rate_hz(fs);

    let (acoustic, gamma) = match cfg.mode {
        EnhancementMode::Fusion | EnhancementMode::AcousticOnly => {
            let (s_a, gamma) = acoustic_path(&spec, &noisy_mag, noise_ref, cfg)?;
            (Some(s_a), Some(gamma))
        }
        _ => (None, None),
    };
    let modulation = match cfg.mode {
        EnhancementMode::Fusion | EnhancementMode::ModmaskOnly => Some(enhance_modulation(
            &noisy_mag,
            &cfg.modmask,
            &cfg.modulation,
            rate,
        )?),
        EnhancementMode::ModssubOnly => Some(enhance_mod_ssub(
            &noisy_mag,
            &cfg.modmask,
            &cfg.modulation,
            rate,
        )?),
        EnhancementMode::AcousticOnly => None,
    };
    let clamped_fraction = modulation.as_ref().map_or(0.0, |m| m.clamped_fraction);
    let modulation_mag = modulation.map(|m| m.magnitude);

    let output_mag = match (&acoustic, &modulation_mag, &gamma) {
        (Some(a), Some(m), Some(g)) => fuse(a, m, &psi_grid(g, cfg.fusion.snr_scope), &cfg.fusion)?,
        (Some(a), None, _) => a.clone(),
        (None, Some(m), _) => m.clone(),
        _ => unreachable!("every mode runs at least one path"),
    };
    let output = synthesize(&output_mag, &phase, &spec)?;
    Ok(EnhancementDetail {
        output,
        noisy_mag,
        acoustic_mag: acoustic,
        modulation_mag,
        output_mag,
        clamped_fraction,
    })
}
