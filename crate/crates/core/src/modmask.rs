//! Modulation-domain path.
//!
//! Each acoustic bin's magnitude trajectory is itself framed and
//! transformed. Modulation components are kept or dropped by a binary
//! SNR criterion, with the clean modulation power estimated by spectral
//! subtraction, and the trajectories are resynthesised onto the original
//! acoustic frame grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{AnalysisConfig, StftEngine};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealGrid};

/// Floor on the noise modulation power.
pub const NOISE_MOD_FLOOR: f64 = 1e-12;

/// Frames whose energy is this far below the utterance median count as
/// speech-absent.
pub const VAD_MARGIN_DB: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModMaskParams {
    /// SNR threshold η_th (dB); components at or above it are retained.
    pub eta_th_db: f64,
    /// Modulation cut-off M_c (Hz).
    pub mc_hz: f64,
    /// Always retain the m = 0 channel.
    pub keep_dc: bool,
    /// Spectral floor of the subtraction, relative to the noisy power.
    pub subtraction_floor: f64,
    /// Leading modulation frames used when the VAD finds too few pauses.
    pub noise_frames_init: usize,
}

impl Default for ModMaskParams {
    fn default() -> Self {
        Self {
            eta_th_db: -10.0,
            mc_hz: 4.0,
            keep_dc: true,
            subtraction_floor: 0.01,
            noise_frames_init: 8,
        }
    }
}

impl ModMaskParams {
    pub fn validate(&self, acoustic_frame_rate_hz: f64) -> Result<()> {
        if self.eta_th_db.is_nan() {
            return Err(Error::config("modmask: eta_th_db must not be NaN"));
        }
        let nyquist = acoustic_frame_rate_hz / 2.0;
        if !(self.mc_hz >= 0.0 && self.mc_hz < nyquist) {
            return Err(Error::config(format!(
                "modmask: mc_hz < modulation Nyquist violated (mc_hz = {}, Nyquist = {nyquist} Hz)",
                self.mc_hz
            )));
        }
        if !(self.subtraction_floor > 0.0 && self.subtraction_floor < 1.0) {
            return Err(Error::config(format!(
                "modmask: subtraction_floor must lie in (0, 1), got {}",
                self.subtraction_floor
            )));
        }
        if self.noise_frames_init == 0 {
            return Err(Error::config(
                "modmask: noise_frames_init must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Second-level STFT of an acoustic magnitude matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpectrogram {
    /// One `modulation frames × modulation bins` grid per acoustic bin.
    pub coeffs: Vec<Grid<Complex64>>,
    pub mod_config: AnalysisConfig,
    pub acoustic_frame_rate_hz: f64,
    /// Acoustic frames of the trajectory before edge padding.
    pub source_frames: usize,
}

impl ModulationSpectrogram {
    pub fn num_acoustic_bins(&self) -> usize {
        self.coeffs.len()
    }

    pub fn num_mod_frames(&self) -> usize {
        self.coeffs.first().map_or(0, Grid::rows)
    }

    pub fn num_mod_bins(&self) -> usize {
        self.mod_config.num_bins()
    }

    /// Centre frequency of modulation bin `m` in Hz.
    pub fn mod_bin_hz(&self, m: usize) -> f64 {
        mod_bin_hz(m, &self.mod_config, self.acoustic_frame_rate_hz)
    }

    /// Reflected frames prepended to each trajectory.
    pub fn edge_pad(&self) -> usize {
        edge_pad(&self.mod_config)
    }
}

pub fn mod_bin_hz(m: usize, mod_cfg: &AnalysisConfig, frame_rate_hz: f64) -> f64 {
    m as f64 * frame_rate_hz / mod_cfg.fft_size as f64
}

fn edge_pad(cfg: &AnalysisConfig) -> usize {
    cfg.window_len_samples - cfg.hop_samples
}

/// Reflect (without repeating the edge sample) `pad` values onto both ends.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| x[n - 1 - i]));
    out
}

fn check_frames(frames: usize, cfg: &AnalysisConfig) -> Result<()> {
    let need = cfg.window_len_samples.max(edge_pad(cfg) + 1);
    if frames < need {
        return Err(Error::Framing(format!(
            "modulation analysis needs at least {need} acoustic frames, got {frames}"
        )));
    }
    Ok(())
}

/// Transforms every acoustic bin's magnitude trajectory.
///
/// Trajectories are reflect-padded by `window - hop` frames at both ends so
/// that every original frame lies under full overlap.
pub fn modulation_stft(
    acoustic_mag: &RealGrid,
    mod_cfg: &AnalysisConfig,
    acoustic_frame_rate_hz: f64,
) -> Result<ModulationSpectrogram> {
    let engine = StftEngine::new(*mod_cfg)?;
    let (frames, bins) = acoustic_mag.shape();
    check_frames(frames, mod_cfg)?;
    if !(acoustic_frame_rate_hz > 0.0) {
        return Err(Error::Input(format!(
            "acoustic frame rate must be positive, got {acoustic_frame_rate_hz}"
        )));
    }
    let pad = edge_pad(mod_cfg);
    let coeffs = (0..bins)
        .map(|k| engine.analyze(&reflect_pad(&acoustic_mag.column(k), pad)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModulationSpectrogram {
        coeffs,
        mod_config: *mod_cfg,
        acoustic_frame_rate_hz,
        source_frames: frames,
    })
}

/// Overlap-add back onto the acoustic frame grid. No clamping.
pub fn modulation_istft(spec: &ModulationSpectrogram) -> Result<RealGrid> {
    let engine = StftEngine::new(spec.mod_config)?;
    let frames = spec.source_frames;
    let pad = spec.edge_pad();
    let mut out = RealGrid::filled(frames, spec.num_acoustic_bins(), 0.0);
    for (k, grid) in spec.coeffs.iter().enumerate() {
        let traj = engine.synthesize(grid, frames + 2 * pad)?;
        for (p, v) in traj[pad..pad + frames].iter().enumerate() {
            *out.get_mut(p, k) = *v;
        }
    }
    Ok(out)
}

/// Per-modulation-frame speech absence from acoustic frame energies.
///
/// A modulation frame is flagged when the mean energy of the acoustic
/// frames under its window is more than [`VAD_MARGIN_DB`] below the
/// median frame energy. If fewer than `noise_frames_init` frames qualify,
/// the first `noise_frames_init` frames are flagged instead.
pub fn speech_absence_flags(
    acoustic_mag: &RealGrid,
    mod_cfg: &AnalysisConfig,
    noise_frames_init: usize,
) -> Result<Vec<bool>> {
    let frames = acoustic_mag.rows();
    check_frames(frames, mod_cfg)?;
    let energy: Vec<f64> = acoustic_mag
        .rows_iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>())
        .collect();
    let padded = reflect_pad(&energy, edge_pad(mod_cfg));
    let num_q = mod_cfg.num_frames(padded.len())?;

    let mut sorted_db: Vec<f64> = energy.iter().map(|&e| energy_db(e)).collect();
    sorted_db.sort_by(f64::total_cmp);
    let median = sorted_db[sorted_db.len() / 2];

    let win = mod_cfg.window_len_samples;
    let mut flags: Vec<bool> = (0..num_q)
        .map(|q| {
            let start = q * mod_cfg.hop_samples;
            let span = &padded[start..(start + win).min(padded.len())];
            let mean = span.iter().sum::<f64>() / span.len() as f64;
            energy_db(mean) < median - VAD_MARGIN_DB
        })
        .collect();
    let init = noise_frames_init.min(num_q);
    if flags.iter().filter(|&&f| f).count() < init {
        flags
            .iter_mut()
            .enumerate()
            .for_each(|(q, f)| *f = q < init);
    }
    Ok(flags)
}

fn energy_db(e: f64) -> f64 {
    10.0 * e.max(1e-30).log10()
}

/// Mean modulation power over speech-absent frames, `[k × m]`.
pub fn noise_modulation_psd(noisy_mod: &ModulationSpectrogram, flags: &[bool]) -> Result<RealGrid> {
    let q_count = noisy_mod.num_mod_frames();
    if flags.len() != q_count {
        return Err(Error::shape(
            format!("{q_count} speech-absence flags"),
            format!("{} flags", flags.len()),
        ));
    }
    let n = flags.iter().filter(|&&f| f).count();
    if n == 0 {
        return Err(Error::Input(
            "no speech-absent modulation frames to estimate noise from".into(),
        ));
    }
    let bins = noisy_mod.num_mod_bins();
    let mut out = RealGrid::filled(noisy_mod.num_acoustic_bins(), bins, 0.0);
    for (k, grid) in noisy_mod.coeffs.iter().enumerate() {
        for (q, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
            for (m, c) in grid.row(q).iter().enumerate() {
                *out.get_mut(k, m) += c.norm_sqr();
            }
        }
    }
    for v in out.as_mut_slice() {
        *v = (*v / n as f64).max(NOISE_MOD_FLOOR);
    }
    Ok(out)
}

/// `max(noisy − noise, floor · noisy)`.
pub fn mod_spectral_subtraction(noisy_power: f64, noise_power: f64, floor: f64) -> f64 {
    (noisy_power - noise_power)
        .max(floor * noisy_power)
        .max(0.0)
}

/// Modulation-domain SNR ξ (linear).
pub fn mod_snr(clean_est_power: f64, noise_power: f64) -> f64 {
    clean_est_power / noise_power
}

/// Binary channel-selection gain, with bin spacing `frame_rate / 64` of the
/// standard modulation transform.
pub fn binary_gain(xi: f64, m_bin: usize, params: &ModMaskParams, frame_rate_hz: f64) -> f64 {
    let hz = mod_bin_hz(m_bin, &AnalysisConfig::MODULATION, frame_rate_hz);
    binary_gain_at(xi, m_bin, hz, params)
}

/// Binary gain for modulation bin `m_bin` centred at `m_hz`.
pub fn binary_gain_at(xi: f64, m_bin: usize, m_hz: f64, params: &ModMaskParams) -> f64 {
    if m_bin == 0 && params.keep_dc {
        return 1.0;
    }
    // ξ is compared in dB so the threshold boundary is exact.
    if m_hz <= params.mc_hz && 10.0 * xi.log10() >= params.eta_th_db {
        1.0
    } else {
        0.0
    }
}

/// Result of a modulation-domain enhancement.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationOutput {
    /// Ŝ_M on the acoustic frame grid, non-negative.
    pub magnitude: RealGrid,
    /// Fraction of output values that were negative before clamping.
    pub clamped_fraction: f64,
}

/// Applies `gain(k, q, m)` to every modulation coefficient and resynthesises.
pub fn apply_modulation_gain(
    acoustic_mag: &RealGrid,
    mod_cfg: &AnalysisConfig,
    acoustic_frame_rate_hz: f64,
    mut gain: impl FnMut(usize, usize, usize) -> f64,
) -> Result<ModulationOutput> {
    let mut spec = modulation_stft(acoustic_mag, mod_cfg, acoustic_frame_rate_hz)?;
    for (k, grid) in spec.coeffs.iter_mut().enumerate() {
        let bins = grid.cols();
        for (i, c) in grid.as_mut_slice().iter_mut().enumerate() {
            *c *= gain(k, i / bins, i % bins);
        }
    }
    Ok(clamp_output(modulation_istft(&spec)?))
}

fn clamp_output(mut mag: RealGrid) -> ModulationOutput {
    let total = mag.as_slice().len().max(1);
    let mut clamped = 0usize;
    for v in mag.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    ModulationOutput {
        magnitude: mag,
        clamped_fraction: clamped as f64 / total as f64,
    }
}

/// Binary masks `[k] → [q × m]` for a noisy modulation spectrogram.
pub fn channel_mask(
    noisy_mod: &ModulationSpectrogram,
    noise_psd: &RealGrid,
    params: &ModMaskParams,
) -> Result<Vec<RealGrid>> {
    noise_psd.ensure_shape(noisy_mod.num_acoustic_bins(), noisy_mod.num_mod_bins())?;
    Ok(noisy_mod
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, grid)| {
            Grid::from_fn(grid.rows(), grid.cols(), |q, m| {
                let noisy = grid.get(q, m).norm_sqr();
                let noise = *noise_psd.get(k, m);
                let clean = mod_spectral_subtraction(noisy, noise, params.subtraction_floor);
                binary_gain_at(mod_snr(clean, noise), m, noisy_mod.mod_bin_hz(m), params)
            })
        })
        .collect())
}

fn noisy_mod_and_noise(
    acoustic_mag: &RealGrid,
    params: &ModMaskParams,
    mod_cfg: &AnalysisConfig,
    rate: f64,
) -> Result<(ModulationSpectrogram, RealGrid)> {
    params.validate(rate)?;
    let spec = modulation_stft(acoustic_mag, mod_cfg, rate)?;
    let flags = speech_absence_flags(acoustic_mag, mod_cfg, params.noise_frames_init)?;
    let noise = noise_modulation_psd(&spec, &flags)?;
    Ok((spec, noise))
}

/// Modulation channel selection: Ŝ_M from the noisy acoustic magnitudes.
pub fn enhance_modulation(
    acoustic_mag: &RealGrid,
    params: &ModMaskParams,
    mod_cfg: &AnalysisConfig,
    acoustic_frame_rate_hz: f64,
) -> Result<ModulationOutput> {
    let (mut spec, noise) =
        noisy_mod_and_noise(acoustic_mag, params, mod_cfg, acoustic_frame_rate_hz)?;
    let masks = channel_mask(&spec, &noise, params)?;
    for (grid, mask) in spec.coeffs.iter_mut().zip(&masks) {
        for (c, g) in grid.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *c *= *g;
        }
    }
    Ok(clamp_output(modulation_istft(&spec)?))
}

/// Modulation spectral subtraction baseline: subtracted magnitudes with the
/// noisy modulation phase, no channel selection.
pub fn enhance_mod_ssub(
    acoustic_mag: &RealGrid,
    params: &ModMaskParams,
    mod_cfg: &AnalysisConfig,
    acoustic_frame_rate_hz: f64,
) -> Result<ModulationOutput> {
    let (mut spec, noise) =
        noisy_mod_and_noise(acoustic_mag, params, mod_cfg, acoustic_frame_rate_hz)?;
    for (k, grid) in spec.coeffs.iter_mut().enumerate() {
        let bins = grid.cols();
        for (i, c) in grid.as_mut_slice().iter_mut().enumerate() {
            let noisy = c.norm_sqr();
            if noisy == 0.0 {
                continue;
            }
            let clean =
                mod_spectral_subtraction(noisy, *noise.get(k, i % bins), params.subtraction_floor);
            *c *= (clean / noisy).sqrt();
        }
    }
    Ok(clamp_output(modulation_istft(&spec)?))
}
