//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc.

use std::f64::consts::PI;

use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::specfun::bessel_i0;

/// Low-pass prototype settings, relative to the lower of the two rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterDesign {
    /// Cut-off as a fraction of the lower sample rate.
    pub cutoff: f64,
    /// Kaiser shape parameter.
    pub beta: f64,
    /// Taps per polyphase branch; `None` sizes the filter for a transition
    /// band from `0.45` to `0.5` of the lower rate.
    pub taps_per_phase: Option<usize>,
}

impl FilterDesign {
    /// Transition 0.45 to 0.5 of the lower rate, about 80 dB stop band.
    pub const CORPUS: FilterDesign = FilterDesign {
        cutoff: 0.475,
        beta: 7.857,
        taps_per_phase: None,
    };

    /// Fixed 64 taps per branch.
    pub const COMPACT: FilterDesign = FilterDesign {
        cutoff: 0.475,
        beta: 7.857,
        taps_per_phase: Some(64),
    };
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn integral_rate(hz: f64) -> Result<u64> {
    if !(hz > 0.0) || hz.fract() != 0.0 || hz > 1e9 {
        return Err(Error::Input(format!(
            "sample rates must be positive integers in Hz, got {hz}"
        )));
    }
    Ok(hz as u64)
}

/// A resampler for one rate pair.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    taps: Vec<f64>,
    delay: usize,
}

impl Resampler {
    pub fn new(from_hz: f64, to_hz: f64, design: FilterDesign) -> Result<Self> {
        let (a, b) = (integral_rate(from_hz)?, integral_rate(to_hz)?);
        let g = gcd(a, b);
        let (up, down) = ((b / g) as usize, (a / g) as usize);
        let fs_up = (a * up as u64) as f64;
        let f_low = a.min(b) as f64;
        let cut = design.cutoff * f_low / fs_up;
        let len = match design.taps_per_phase {
            Some(k) => k * up + 1,
            None => {
                // Kaiser's length estimate for ~80 dB over the transition band.
                let dw = 2.0 * PI * (0.5 - 0.45) * f_low / fs_up;
                ((80.0 - 7.95) / (2.285 * dw)).ceil() as usize
            }
        };
        let len = len.max(3) | 1;
        let delay = (len - 1) / 2;
        let i0b = bessel_i0(design.beta);
        let mut taps: Vec<f64> = (0..len)
            .map(|j| {
                let t = j as f64 - delay as f64;
                let r = t / delay as f64;
                let win = bessel_i0(design.beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
                let sinc = if t == 0.0 {
                    2.0 * cut
                } else {
                    (2.0 * PI * cut * t).sin() / (PI * t)
                };
                sinc * win
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t *= up as f64 / sum;
        }
        Ok(Self {
            up,
            down,
            taps,
            delay,
        })
    }

    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up).div_ceil(self.down)
    }

    /// Zero-phase filtering; the signal is taken as zero outside its span.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let (l, m) = (self.up as i64, self.down as i64);
        let n_taps = self.taps.len() as i64;
        let d = self.delay as i64;
        (0..self.output_len(x.len()) as i64)
            .map(|n| {
                let t = n * m + d;
                // Input i contributes tap t - i·l, which must lie in [0, n_taps).
                let i_hi = (t / l).min(x.len() as i64 - 1);
                let i_lo = ((t - n_taps + 1).max(0) + l - 1) / l;
                let mut acc = 0.0;
                let mut i = i_lo;
                while i <= i_hi {
                    acc += x[i as usize] * self.taps[(t - i * l) as usize];
                    i += 1;
                }
                acc
            })
            .collect()
    }
}

/// Resamples with [`FilterDesign::CORPUS`]. Equal rates pass through untouched.
pub fn resample_to(w: &Waveform, target_hz: f64) -> Result<Waveform> {
    resample_with(w, target_hz, FilterDesign::CORPUS)
}

pub fn resample_with(w: &Waveform, target_hz: f64, design: FilterDesign) -> Result<Waveform> {
    if !(target_hz > 0.0) {
        return Err(Error::Input(format!(
            "target rate must be positive, got {target_hz}"
        )));
    }
    if target_hz == w.sample_rate_hz() {
        return Ok(w.clone());
    }
    let r = Resampler::new(w.sample_rate_hz(), target_hz, design)?;
    Waveform::new(r.process(w.samples()), target_hz)
}
