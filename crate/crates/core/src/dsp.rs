//! Windowed STFT analysis and weighted overlap-add synthesis.
//!
//! The same engine runs both levels of the dual analysis-modification-synthesis
//! chain: acoustic frames over a waveform, and modulation frames over the
//! time trajectory of each acoustic bin's magnitude.
//!
//! Conventions fixed crate-wide:
//! - forward FFT is unnormalized, inverse carries `1/N`;
//! - frame `p` starts at sample `p * hop`, the window occupies the first
//!   `window_len` points of an `fft_size` transform (zero padded);
//! - the tail is zero padded so the last partial frame is analysed, giving
//!   `1 + ceil((len - window_len) / hop)` frames;
//! - synthesis divides the overlap-added `w * frame` by the overlap-added
//!   `w²`, so any window/hop pair with nonvanishing `Σ w²` reconstructs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealGrid};

/// Mono time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Input(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Input(
                "waveform must contain at least one sample".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Input(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Same rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hamming,
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic (DFT-even) window of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let n = len as f64;
        (0..len)
            .map(|i| {
                let phase = 2.0 * PI * i as f64 / n;
                match self {
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hamming => "hamming",
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

/// Framing parameters of one STFT level. Lengths are in samples of whatever
/// sequence is being framed (audio samples or acoustic frames).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window_len_samples: usize,
    pub hop_samples: usize,
    pub fft_size: usize,
    pub window_kind: WindowKind,
}

impl AnalysisConfig {
    /// 32 ms Hamming window, 16 ms hop, 512-point FFT at 16 kHz.
    pub const ACOUSTIC_16K: AnalysisConfig = AnalysisConfig {
        window_len_samples: 512,
        hop_samples: 256,
        fft_size: 512,
        window_kind: WindowKind::Hamming,
    };

    /// 16 acoustic frames (256 ms) window, 2 frames (32 ms) hop, 64-point FFT.
    pub const MODULATION: AnalysisConfig = AnalysisConfig {
        window_len_samples: 16,
        hop_samples: 2,
        fft_size: 64,
        window_kind: WindowKind::Hamming,
    };

    pub fn validate(&self) -> Result<()> {
        let AnalysisConfig {
            window_len_samples: win,
            hop_samples: hop,
            fft_size: fft,
            ..
        } = *self;
        if hop == 0 || win == 0 || fft == 0 {
            return Err(Error::config(
                "analysis lengths must be positive (window_len_samples, hop_samples, fft_size)",
            ));
        }
        if !(hop <= win && win <= fft) {
            return Err(Error::config(format!(
                "hop_samples <= window_len_samples <= fft_size violated ({hop}, {win}, {fft})"
            )));
        }
        if fft % 2 != 0 {
            return Err(Error::config(format!("fft_size must be even, got {fft}")));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Length after tail padding: the smallest `window + j * hop >= len`.
    pub fn padded_len(&self, len: usize) -> Result<usize> {
        let win = self.window_len_samples;
        if len < win {
            return Err(Error::Framing(format!(
                "signal of {len} samples is shorter than the {win}-sample window"
            )));
        }
        let extra = len - win;
        Ok(win + extra.div_ceil(self.hop_samples) * self.hop_samples)
    }

    pub fn num_frames(&self, len: usize) -> Result<usize> {
        Ok(1 + (self.padded_len(len)? - self.window_len_samples) / self.hop_samples)
    }

    /// Sample range covered by the full overlap of neighbouring frames,
    /// i.e. away from the first and last `window - hop` samples.
    pub fn interior(&self, len: usize) -> std::ops::Range<usize> {
        let edge = self.window_len_samples - self.hop_samples;
        edge.min(len)..len.saturating_sub(edge).max(edge.min(len))
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self::ACOUSTIC_16K
    }
}

/// One-sided complex STFT together with what is needed to invert it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub coeffs: Grid<Complex64>,
    pub config: AnalysisConfig,
    pub source_len_samples: usize,
    pub sample_rate_hz: f64,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn num_bins(&self) -> usize {
        self.coeffs.cols()
    }

    pub fn magnitude(&self) -> RealGrid {
        self.coeffs.map(|c| c.norm())
    }

    pub fn power(&self) -> RealGrid {
        self.coeffs.map(|c| c.norm_sqr())
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz / self.config.fft_size as f64
    }

    fn check_consistent(&self) -> Result<()> {
        self.config.validate()?;
        let frames = self.config.num_frames(self.source_len_samples)?;
        self.coeffs.ensure_shape(frames, self.config.num_bins())
    }
}

/// Reusable FFT plans and window for one [`AnalysisConfig`].
#[derive(Clone)]
pub struct StftEngine {
    config: AnalysisConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for StftEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StftEngine")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl StftEngine {
    pub fn new(config: AnalysisConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            window: config.window_kind.coefficients(config.window_len_samples),
            forward: planner.plan_fft_forward(config.fft_size),
            inverse: planner.plan_fft_inverse(config.fft_size),
            config,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Analyse a real sequence into `frames × (fft/2 + 1)` coefficients.
    pub fn analyze(&self, x: &[f64]) -> Result<Grid<Complex64>> {
        let cfg = &self.config;
        let frames = cfg.num_frames(x.len())?;
        let bins = cfg.num_bins();
        let mut out = Grid::filled(frames, bins, Complex64::new(0.0, 0.0));
        let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for p in 0..frames {
            let start = p * cfg.hop_samples;
            buf.fill(Complex64::new(0.0, 0.0));
            for (n, (slot, w)) in buf.iter_mut().zip(&self.window).enumerate() {
                let v = x.get(start + n).copied().unwrap_or(0.0);
                *slot = Complex64::new(v * w, 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            out.row_mut(p).copy_from_slice(&buf[..bins]);
        }
        Ok(out)
    }

    /// Weighted overlap-add synthesis, truncated to `out_len` samples.
    pub fn synthesize(&self, coeffs: &Grid<Complex64>, out_len: usize) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let bins = cfg.num_bins();
        if coeffs.cols() != bins {
            return Err(Error::shape(
                format!("{bins} bins"),
                format!("{} bins", coeffs.cols()),
            ));
        }
        let n = cfg.fft_size;
        let win = cfg.window_len_samples;
        let total = (coeffs.rows().saturating_sub(1)) * cfg.hop_samples + win;
        let mut acc = vec![0.0; total.max(out_len)];
        let mut norm = vec![0.0; total.max(out_len)];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        let scale = 1.0 / n as f64;
        for (p, row) in coeffs.rows_iter().enumerate() {
            hermitian_fill(row, &mut buf);
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = p * cfg.hop_samples;
            for i in 0..win {
                let w = self.window[i];
                acc[start + i] += w * buf[i].re * scale;
                norm[start + i] += w * w;
            }
        }
        let floor = 1e-10;
        Ok(acc
            .iter()
            .zip(&norm)
            .take(out_len)
            .map(|(&a, &d)| if d > floor { a / d } else { 0.0 })
            .collect())
    }
}

/// Expand a one-sided spectrum into a full conjugate-symmetric buffer.
fn hermitian_fill(half: &[Complex64], full: &mut [Complex64]) {
    let n = full.len();
    full[..half.len()].copy_from_slice(half);
    // DC and Nyquist of a real signal are real.
    full[0].im = 0.0;
    full[n / 2].im = 0.0;
    for k in 1..n / 2 {
        full[n - k] = half[k].conj();
    }
}

pub fn stft(w: &Waveform, cfg: &AnalysisConfig) -> Result<Spectrogram> {
    let engine = StftEngine::new(*cfg)?;
    stft_with(&engine, w)
}

pub fn stft_with(engine: &StftEngine, w: &Waveform) -> Result<Spectrogram> {
    Ok(Spectrogram {
        coeffs: engine.analyze(w.samples())?,
        config: *engine.config(),
        source_len_samples: w.len(),
        sample_rate_hz: w.sample_rate_hz(),
    })
}

pub fn istft(s: &Spectrogram) -> Result<Waveform> {
    s.check_consistent()?;
    let engine = StftEngine::new(s.config)?;
    let samples = engine.synthesize(&s.coeffs, s.source_len_samples)?;
    Waveform::new(samples, s.sample_rate_hz)
}

/// Magnitude and phase of every coefficient; `0` has phase `0`.
pub fn split_mag_phase(s: &Spectrogram) -> (RealGrid, RealGrid) {
    let mag = s.coeffs.map(|c| c.norm());
    let phase = s.coeffs.map(|c| {
        if *c == Complex64::new(0.0, 0.0) {
            0.0
        } else {
            c.arg()
        }
    });
    (mag, phase)
}

/// Inverse of [`split_mag_phase`], carrying framing metadata from `like`.
pub fn recombine(mag: &RealGrid, phase: &RealGrid, like: &Spectrogram) -> Result<Spectrogram> {
    mag.ensure_shape(like.num_frames(), like.num_bins())?;
    phase.ensure_shape(like.num_frames(), like.num_bins())?;
    let data = mag
        .as_slice()
        .iter()
        .zip(phase.as_slice())
        .map(|(&m, &ph)| Complex64::from_polar(m, ph))
        .collect();
    Ok(Spectrogram {
        coeffs: Grid::from_vec(mag.rows(), mag.cols(), data)?,
        config: like.config,
        source_len_samples: like.source_len_samples,
        sample_rate_hz: like.sample_rate_hz,
    })
}
