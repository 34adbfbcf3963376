//! Objective evaluation: ESTOI and segmental SNR.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::corpus::{resample_with, FilterDesign};
use crate::dsp::Waveform;
use crate::error::{Error, Result};

const FS: f64 = 10000.0;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
/// Frames per intermediate-intelligibility segment (384 ms).
const SEGMENT: usize = 30;
const DYN_RANGE_DB: f64 = 40.0;

/// One row of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub utterance_id: String,
    pub noise_type: String,
    pub snr_db: f64,
    pub method: String,
    pub estoi: f64,
    pub seg_snr_db: f64,
}

fn check_pair(clean: &Waveform, processed: &Waveform) -> Result<()> {
    if clean.len() != processed.len() {
        return Err(Error::shape(
            format!("{} samples", clean.len()),
            format!("{} samples", processed.len()),
        ));
    }
    if clean.sample_rate_hz() != processed.sample_rate_hz() {
        return Err(Error::Input(format!(
            "sample rates differ: {} Hz and {} Hz",
            clean.sample_rate_hz(),
            processed.sample_rate_hz()
        )));
    }
    Ok(())
}

/// Hann window of `n` points without the zero end points.
fn hann_inner(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n + 1) as f64).cos())
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    // Frames start every hop while a full frame still fits strictly inside.
    (0..len.saturating_sub(FRAME)).step_by(HOP)
}

/// Drops frames more than 40 dB below the loudest clean frame and
/// overlap-adds what is left.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = hann_inner(FRAME);
    let frame = |s: &[f64], i: usize| -> Vec<f64> { (0..FRAME).map(|n| w[n] * s[i + n]).collect() };
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&i| {
            let e: f64 = frame(x, i).iter().map(|v| v * v).sum();
            20.0 * (e.sqrt() + f64::EPSILON).log10()
        })
        .collect();
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e > max - DYN_RANGE_DB)
        .map(|(&i, _)| i)
        .collect();
    let out_len = if kept.is_empty() {
        0
    } else {
        (kept.len() - 1) * HOP + FRAME
    };
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (j, &i) in kept.iter().enumerate() {
        for n in 0..FRAME {
            xs[j * HOP + n] += w[n] * x[i + n];
            ys[j * HOP + n] += w[n] * y[i + n];
        }
    }
    (xs, ys)
}

/// One-third octave band envelopes, `bands × frames`.
fn third_octave_envelopes(x: &[f64], obm: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let w = hann_inner(FRAME);
    let fft = FftPlanner::new().plan_fft_forward(NFFT);
    let mut buf = vec![Complex64::new(0.0, 0.0); NFFT];
    let mut out = vec![Vec::new(); obm.len()];
    for i in frame_starts(x.len()) {
        buf.fill(Complex64::new(0.0, 0.0));
        for n in 0..FRAME {
            buf[n] = Complex64::new(w[n] * x[i + n], 0.0);
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in obm.iter().enumerate() {
            let p: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            out[b].push(p.sqrt());
        }
    }
    out
}

/// Bin ranges `[lo, hi)` of the 15 bands, edges snapped to the nearest bin.
fn third_octave_bins() -> Vec<(usize, usize)> {
    let freqs: Vec<f64> = (0..=NFFT / 2)
        .map(|k| k as f64 * FS / NFFT as f64)
        .collect();
    let nearest = |f: f64| -> usize {
        freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    (0..BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Subtracts the mean and scales to unit norm; zero vectors stay zero.
fn normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Extended short-time objective intelligibility of `processed` against
/// `clean`. Range `[-1, 1]`; not clamped.
pub fn estoi(clean: &Waveform, processed: &Waveform) -> Result<f64> {
    check_pair(clean, processed)?;
    if clean.samples().iter().all(|&v| v == 0.0) {
        return Err(Error::Input("clean signal is silent".into()));
    }
    let x = resample_with(clean, FS, FilterDesign::COMPACT)?;
    let y = resample_with(processed, FS, FilterDesign::COMPACT)?;
    let (xs, ys) = remove_silent_frames(x.samples(), y.samples());
    let obm = third_octave_bins();
    let xe = third_octave_envelopes(&xs, &obm);
    let ye = third_octave_envelopes(&ys, &obm);
    let frames = xe[0].len();
    if frames < SEGMENT {
        return Err(Error::Input(format!(
            "too little non-silent material for ESTOI: {frames} frames, need {SEGMENT}"
        )));
    }
    let segments = frames - SEGMENT + 1;
    let mut total = 0.0;
    let mut xm = vec![vec![0.0; SEGMENT]; BANDS];
    let mut ym = vec![vec![0.0; SEGMENT]; BANDS];
    let mut col_x = vec![0.0; BANDS];
    let mut col_y = vec![0.0; BANDS];
    for m in 0..segments {
        for b in 0..BANDS {
            xm[b].copy_from_slice(&xe[b][m..m + SEGMENT]);
            ym[b].copy_from_slice(&ye[b][m..m + SEGMENT]);
            normalize(&mut xm[b]);
            normalize(&mut ym[b]);
        }
        let mut seg = 0.0;
        for n in 0..SEGMENT {
            for b in 0..BANDS {
                col_x[b] = xm[b][n];
                col_y[b] = ym[b][n];
            }
            normalize(&mut col_x);
            normalize(&mut col_y);
            seg += col_x.iter().zip(&col_y).map(|(a, b)| a * b).sum::<f64>();
        }
        total += seg / SEGMENT as f64;
    }
    Ok(total / segments as f64)
}

/// Per-frame SNR limits (dB).
pub const SEG_SNR_RANGE_DB: (f64, f64) = (-10.0, 35.0);

/// Mean over 32 ms frames of the clamped frame SNR, skipping frames whose
/// clean energy is more than 40 dB below the loudest frame.
pub fn segmental_snr(clean: &Waveform, processed: &Waveform) -> Result<f64> {
    check_pair(clean, processed)?;
    let frame = (0.032 * clean.sample_rate_hz()).round() as usize;
    let pairs: Vec<(f64, f64)> = clean
        .samples()
        .chunks_exact(frame)
        .zip(processed.samples().chunks_exact(frame))
        .map(|(s, p)| {
            let sig: f64 = s.iter().map(|v| v * v).sum();
            let err: f64 = s.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            (sig, err)
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::Input(format!(
            "signals shorter than one {frame}-sample frame"
        )));
    }
    let peak = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Input("clean signal is silent".into()));
    }
    let floor = peak * 10f64.powf(-DYN_RANGE_DB / 10.0);
    let (lo, hi) = SEG_SNR_RANGE_DB;
    let kept: Vec<f64> = pairs
        .iter()
        .filter(|(sig, _)| *sig > floor)
        .map(|&(sig, err)| {
            if err == 0.0 {
                hi
            } else {
                (10.0 * (sig / err).log10()).clamp(lo, hi)
            }
        })
        .collect();
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}
