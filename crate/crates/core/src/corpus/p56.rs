//! Active speech level, ITU-T P.56 method B.

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Envelope time constant (s).
pub const TIME_CONSTANT_S: f64 = 0.03;
/// Hangover (s).
pub const HANGOVER_S: f64 = 0.2;
/// Margin between active level and threshold (dB).
pub const MARGIN_DB: f64 = 15.9;
/// Thresholds `2^-15 .. 2^0` relative to full scale.
const THRESHOLDS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveLevel {
    /// Active speech level in dB relative to a full-scale (±1) square wave.
    pub asl_db: f64,
    /// Long-term power over active power, in `(0, 1]`.
    pub activity: f64,
    /// Envelope threshold that separates active from inactive samples.
    pub threshold: f64,
}

struct Envelope {
    g: f64,
    p: f64,
    q: f64,
}

impl Envelope {
    fn new(fs: f64) -> Self {
        Self {
            g: (-1.0 / (fs * TIME_CONSTANT_S)).exp(),
            p: 0.0,
            q: 0.0,
        }
    }

    fn next(&mut self, x: f64) -> f64 {
        self.p = self.g * self.p + (1.0 - self.g) * x.abs();
        self.q = self.g * self.q + (1.0 - self.g) * self.p;
        self.q
    }
}

fn hangover_samples(fs: f64) -> usize {
    (HANGOVER_S * fs).round() as usize
}

fn db10(x: f64) -> f64 {
    10.0 * x.log10()
}

#[allow(clippy::needless_range_loop)]
pub fn active_speech_level(w: &Waveform) -> Result<ActiveLevel> {
    let x = w.samples();
    let fs = w.sample_rate_hz();
    let hang = hangover_samples(fs);
    let thresholds: Vec<f64> = (0..THRESHOLDS).map(|j| 2f64.powi(j as i32 - 15)).collect();
    let mut active = [0usize; THRESHOLDS];
    let mut since = [hang; THRESHOLDS];
    let mut env = Envelope::new(fs);
    let mut sq = 0.0;
    for &v in x {
        sq += v * v;
        let q = env.next(v);
        for j in 0..THRESHOLDS {
            if q >= thresholds[j] {
                active[j] += 1;
                since[j] = 0;
            } else if since[j] < hang {
                active[j] += 1;
                since[j] += 1;
            }
        }
    }
    if sq == 0.0 || active[0] == 0 {
        return Err(Error::Input(
            "active speech level of a silent signal is undefined".into(),
        ));
    }
    let long_term = sq / x.len() as f64;

    // A_j − C_j falls as the threshold rises; find where it crosses the margin.
    let level = |j: usize| db10(sq / active[j] as f64);
    let thr_db = |j: usize| 2.0 * db10(thresholds[j]);
    let mut prev: Option<(f64, f64)> = None;
    let mut result = None;
    for j in 0..THRESHOLDS {
        if active[j] == 0 {
            break;
        }
        let (a, c) = (level(j), thr_db(j));
        let delta = a - c;
        if delta <= MARGIN_DB {
            result = Some(match prev {
                None => (a, c),
                Some((pa, pc)) => {
                    let pd = pa - pc;
                    let t = (pd - MARGIN_DB) / (pd - delta);
                    (pa + t * (a - pa), pc + t * (c - pc))
                }
            });
            break;
        }
        prev = Some((a, c));
    }
    // Never reached the margin: every threshold is still far below the level.
    let (asl_db, c_db) = result.or(prev).expect("at least one threshold is active");
    let active_power = 10f64.powf(asl_db / 10.0);
    Ok(ActiveLevel {
        asl_db,
        activity: (long_term / active_power).clamp(f64::MIN_POSITIVE, 1.0),
        threshold: 10f64.powf(c_db / 20.0),
    })
}

/// Per-sample activity at `threshold` with the standard envelope and hangover.
pub fn activity_mask(w: &Waveform, threshold: f64) -> Vec<bool> {
    let hang = hangover_samples(w.sample_rate_hz());
    let mut env = Envelope::new(w.sample_rate_hz());
    let mut since = hang;
    w.samples()
        .iter()
        .map(|&v| {
            if env.next(v) >= threshold {
                since = 0;
                true
            } else if since < hang {
                since += 1;
                true
            } else {
                false
            }
        })
        .collect()
}
