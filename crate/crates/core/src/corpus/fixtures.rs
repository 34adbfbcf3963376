//! Deterministic synthetic material: speech-like signals and noises.
//!
//! The "speech" is a formant-filtered harmonic source with a 3 to 5 Hz
//! syllabic envelope, fricative bursts and pauses. It has the envelope
//! statistics that the enhancement and the intelligibility metric care
//! about without depending on any licensed corpus.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    Pink,
    Babble,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Pink, NoiseKind::Babble];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Babble => "babble",
        }
    }
}

/// Two-pole resonator with unit peak gain.
#[derive(Default)]
struct Resonator {
    a1: f64,
    a2: f64,
    b0: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn tune(&mut self, freq: f64, bw: f64, fs: f64) {
        let r = (-PI * bw / fs).exp();
        self.a1 = 2.0 * r * (2.0 * PI * freq / fs).cos();
        self.a2 = -r * r;
        self.b0 = 1.0 - r;
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

const VOWELS: [[f64; 3]; 6] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [660.0, 1720.0, 2410.0],
];

struct Syllable {
    start: usize,
    len: usize,
    vowel: usize,
    fricative: usize,
}

fn plan(rng: &mut ChaCha8Rng, fs: f64, n: usize) -> Vec<Syllable> {
    let mut out = Vec::new();
    let mut t = (0.1 * fs) as usize;
    let tail = (0.1 * fs) as usize;
    while t < n.saturating_sub(tail) {
        let rate = rng.random_range(3.0..5.0);
        let len = ((fs / rate) as usize).min(n - tail - t);
        if len < (0.05 * fs) as usize {
            break;
        }
        let fricative = if rng.random_bool(0.4) {
            (rng.random_range(0.04..0.09) * fs) as usize
        } else {
            0
        };
        out.push(Syllable {
            start: t,
            len,
            vowel: rng.random_range(0..VOWELS.len()),
            fricative: fricative.min(len / 2),
        });
        t += len;
        if rng.random_bool(0.3) {
            t += (rng.random_range(0.15..0.4) * fs) as usize;
        }
    }
    out
}

/// A speech-like utterance of `secs` seconds, deterministic in `seed`.
pub fn speech_like(seed: u64, fs: f64, secs: f64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * fs) as usize;
    let f0_base = rng.random_range(100.0..220.0);
    let syllables = plan(&mut rng, fs, n);
    let mut voiced = vec![0.0; n];
    let mut frication = vec![0.0; n];
    let mut formants: [Resonator; 3] = Default::default();
    let mut hiss = Resonator::default();
    hiss.tune(rng.random_range(3500.0..5500.0), 2000.0, fs);

    let mut phase = 0.0;
    for syl in &syllables {
        for (f, r) in VOWELS[syl.vowel].iter().zip(formants.iter_mut()) {
            r.tune(*f, 60.0 + 0.06 * f, fs);
        }
        let glide = rng.random_range(-0.15..0.15);
        for i in 0..syl.len {
            let t = syl.start + i;
            let u = i as f64 / syl.len as f64;
            let f0 = f0_base * (1.0 + glide * u + 0.03 * (2.0 * PI * 5.0 * t as f64 / fs).sin());
            phase = (phase + f0 / fs).fract();
            let harmonics = ((4000.0 / f0) as usize).max(1);
            let src: f64 = (1..=harmonics)
                .map(|h| (2.0 * PI * h as f64 * phase).sin() / h as f64)
                .sum();
            let env = if i < syl.fricative {
                0.0
            } else {
                let v = (i - syl.fricative) as f64 / (syl.len - syl.fricative) as f64;
                (PI * v).sin().powf(0.7)
            };
            let y = formants
                .iter_mut()
                .fold(0.0, |acc, r| acc + r.step(env * src));
            voiced[t] = y;
            if i < syl.fricative {
                let v = i as f64 / syl.fricative as f64;
                let g: f64 = StandardNormal.sample(&mut rng);
                frication[t] = hiss.step(g) * (PI * v).sin();
            }
        }
    }
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let (rv, rf) = (rms(&voiced).max(1e-12), rms(&frication).max(1e-12));
    let samples = voiced
        .iter()
        .zip(&frication)
        .map(|(v, f)| 0.05 * v / rv + 0.015 * f / rf)
        .collect();
    Waveform::new(samples, fs).expect("fixture samples are finite")
}

/// `secs` seconds of noise of the given colour, deterministic in `seed`.
pub fn noise(kind: NoiseKind, seed: u64, fs: f64, secs: f64) -> Waveform {
    let n = (secs * fs) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let samples: Vec<f64> = match kind {
        NoiseKind::White => (0..n)
            .map(|_| 0.05 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect(),
        NoiseKind::Pink => {
            // Paul Kellet's economy filter, -3 dB/octave within 0.5 dB.
            let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
            (0..n)
                .map(|_| {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    b0 = 0.99765 * b0 + w * 0.0990460;
                    b1 = 0.96300 * b1 + w * 0.2965164;
                    b2 = 0.57000 * b2 + w * 1.0526913;
                    0.05 * (b0 + b1 + b2 + w * 0.1848) / 3.0
                })
                .collect()
        }
        NoiseKind::Babble => {
            let talkers = 6;
            let mut acc = vec![0.0; n];
            for t in 0..talkers {
                let s = speech_like(rng.random::<u64>() ^ t, fs, secs);
                for (a, v) in acc.iter_mut().zip(s.samples()) {
                    *a += v;
                }
            }
            acc.iter().map(|v| v / (talkers as f64).sqrt()).collect()
        }
    };
    Waveform::new(samples, fs).expect("fixture samples are finite")
}
