//! Acoustic-domain path: SNR tracking and the parametric Bayesian gain.

mod gain;
mod noise;
mod params;
mod schedule;

pub use gain::{gain, gain_with, nu, GainOptions, GAMMA_MIN};
pub use noise::{
    blind_noise_psd, noise_psd_update, oracle_noise_psd, NoisePsdMode, SppTrackerParams,
    ORACLE_SMOOTHING, PSD_FLOOR,
};
pub use params::{Prefactor, PriorScale, StsaParams};
pub use schedule::{
    alpha_schedule, beta_schedule, frame_mean_snr_db, mu_schedule, normalize_frame_snr, BinSchedule,
};

use crate::dsp::Spectrogram;
use crate::error::Result;
use crate::grid::RealGrid;

/// Per-bin SNR state of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrTrack {
    /// A-priori SNR ζ (linear), floored at `zeta_floor`.
    pub zeta: RealGrid,
    /// A-posteriori SNR γ = R²/σ_w².
    pub gamma: RealGrid,
    /// Noise PSD σ_w².
    pub noise_psd: RealGrid,
}

impl SnrTrack {
    pub fn num_frames(&self) -> usize {
        self.zeta.rows()
    }

    /// μ of frame `p`.
    pub fn mu(&self, p: usize, params: &StsaParams) -> f64 {
        let mean_db = frame_mean_snr_db(self.zeta.row(p));
        mu_schedule(
            normalize_frame_snr(mean_db, params.zeta_norm_range_db),
            params,
        )
    }
}

/// Decision-directed a-priori SNR.
pub fn dd_update(
    prev_enhanced_mag: f64,
    prev_noise_psd: f64,
    gamma_now: f64,
    p: &StsaParams,
) -> f64 {
    let a = p.dd_smoothing;
    let prev = prev_enhanced_mag * prev_enhanced_mag / prev_noise_psd;
    let zeta = a * prev + (1.0 - a) * (gamma_now - 1.0).max(0.0);
    if zeta.is_nan() {
        p.zeta_floor
    } else {
        zeta.max(p.zeta_floor)
    }
}

/// Gains of one frame given its ζ and γ rows.
pub fn frame_gains(
    zeta_row: &[f64],
    gamma_row: &[f64],
    mu: f64,
    sched: &BinSchedule,
    p: &StsaParams,
) -> Result<Vec<f64>> {
    let opts = GainOptions::from(p);
    zeta_row
        .iter()
        .zip(gamma_row)
        .enumerate()
        .map(|(k, (&z, &g))| gain_with(z, g, sched.alpha[k], sched.beta[k], mu, opts))
        .collect()
}

/// Runs the decision-directed recursion over an utterance.
///
/// The recursion needs the previous frame's amplitude estimate, so the
/// enhanced magnitudes are produced along the way and returned with the
/// track.
pub fn estimate_track(
    noisy_mag: &RealGrid,
    noise_psd: RealGrid,
    sched: &BinSchedule,
    p: &StsaParams,
) -> Result<(SnrTrack, RealGrid)> {
    p.validate()?;
    let (frames, bins) = noisy_mag.shape();
    noise_psd.ensure_shape(frames, bins)?;
    let mut zeta = RealGrid::filled(frames, bins, p.zeta_floor);
    let mut gamma = RealGrid::filled(frames, bins, 0.0);
    let mut enhanced = RealGrid::filled(frames, bins, 0.0);
    for t in 0..frames {
        for k in 0..bins {
            let r = *noisy_mag.get(t, k);
            let psd = *noise_psd.get(t, k);
            let g = r * r / psd;
            *gamma.get_mut(t, k) = g;
            let (prev_mag, prev_psd) = if t == 0 {
                (0.0, psd)
            } else {
                (*enhanced.get(t - 1, k), *noise_psd.get(t - 1, k))
            };
            *zeta.get_mut(t, k) = dd_update(prev_mag, prev_psd, g, p);
        }
        let mean_db = frame_mean_snr_db(zeta.row(t));
        let mu = mu_schedule(normalize_frame_snr(mean_db, p.zeta_norm_range_db), p);
        let gains = frame_gains(zeta.row(t), gamma.row(t), mu, sched, p)?;
        for (k, gk) in gains.into_iter().enumerate() {
            *enhanced.get_mut(t, k) = gk * *noisy_mag.get(t, k);
        }
    }
    Ok((
        SnrTrack {
            zeta,
            gamma,
            noise_psd,
        },
        enhanced,
    ))
}

/// `Ŝ_A(p,k) = G(ζ, γ, α_k, β_k, μ(p)) · R(p,k)`.
pub fn enhance_acoustic(noisy: &Spectrogram, track: &SnrTrack, p: &StsaParams) -> Result<RealGrid> {
    p.validate()?;
    let mag = noisy.magnitude();
    let (frames, bins) = mag.shape();
    track.zeta.ensure_shape(frames, bins)?;
    track.gamma.ensure_shape(frames, bins)?;
    let sched = BinSchedule::new(bins, noisy.config.fft_size, noisy.sample_rate_hz, p)?;
    let mut out = RealGrid::filled(frames, bins, 0.0);
    for t in 0..frames {
        let mu = track.mu(t, p);
        let gains = frame_gains(track.zeta.row(t), track.gamma.row(t), mu, &sched, p)?;
        for (k, gk) in gains.into_iter().enumerate() {
            *out.get_mut(t, k) = gk * *mag.get(t, k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft, AnalysisConfig, Waveform};
    use crate::grid::Grid;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> StsaParams {
        StsaParams::default()
    }

    #[test]
    fn dd_examples() {
        let p = params();
        assert_eq!(dd_update(0.0, 1.0, 1.0, &p), p.zeta_floor);
        let z = dd_update(10f64.sqrt(), 1.0, 1.0, &p);
        assert!((z - 9.8).abs() < 1e-12);
    }

    #[test]
    fn dd_stationary_fixed_point() {
        // Feed ζ back as the previous power ratio with γ − 1 = ζ*.
        let p = params();
        let target = 4.0;
        let mut z: f64 = 0.1;
        for _ in 0..2000 {
            z = dd_update(z.sqrt(), 1.0, target + 1.0, &p);
        }
        assert!((z - target).abs() < 1e-9, "{z}");
    }

    fn random_spectrogram(seed: u64, frames_len: usize) -> Spectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..frames_len)
            .map(|_| rng.random_range(-0.3..0.3))
            .collect();
        stft(
            &Waveform::new(x, 16000.0).unwrap(),
            &AnalysisConfig::ACOUSTIC_16K,
        )
        .unwrap()
    }

    #[test]
    fn track_and_enhance_agree() {
        let p = params();
        let s = random_spectrogram(11, 8000);
        let mag = s.magnitude();
        let psd = RealGrid::filled(mag.rows(), mag.cols(), 0.5);
        let sched = BinSchedule::new(mag.cols(), 512, 16000.0, &p).unwrap();
        let (track, est) = estimate_track(&mag, psd, &sched, &p).unwrap();
        let again = enhance_acoustic(&s, &track, &p).unwrap();
        assert_eq!(est, again);
        assert!(track.zeta.as_slice().iter().all(|&z| z >= p.zeta_floor));
    }

    #[test]
    fn zero_frame_gives_zero_output() {
        let p = params();
        let mut s = random_spectrogram(12, 4000);
        s.coeffs.row_mut(3).fill(Complex64::new(0.0, 0.0));
        let mag = s.magnitude();
        let psd = RealGrid::filled(mag.rows(), mag.cols(), 0.1);
        let sched = BinSchedule::new(mag.cols(), 512, 16000.0, &p).unwrap();
        let (_, est) = estimate_track(&mag, psd, &sched, &p).unwrap();
        assert!(est.row(3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn floor_frame_is_uniform_per_bin_schedule() {
        let p = params();
        let s = Spectrogram {
            coeffs: Grid::filled(1, 257, Complex64::new(1.0, 0.0)),
            config: AnalysisConfig::ACOUSTIC_16K,
            source_len_samples: 512,
            sample_rate_hz: 16000.0,
        };
        let track = SnrTrack {
            zeta: RealGrid::filled(1, 257, p.zeta_floor),
            gamma: RealGrid::filled(1, 257, 1.0),
            noise_psd: RealGrid::filled(1, 257, 1.0),
        };
        let out = enhance_acoustic(&s, &track, &p).unwrap();
        let sched = BinSchedule::new(257, 512, 16000.0, &p).unwrap();
        for k in 0..257 {
            let g = gain(p.zeta_floor, 1.0, sched.alpha[k], sched.beta[k], p.mu_min).unwrap();
            assert_eq!(*out.get(0, k), g);
        }
    }

    #[test]
    fn scale_invariance() {
        let p = params();
        let s = random_spectrogram(13, 6000);
        let mag = s.magnitude();
        let psd = RealGrid::from_fn(mag.rows(), mag.cols(), |_, k| 0.01 + k as f64 * 1e-3);
        let sched = BinSchedule::new(mag.cols(), 512, 16000.0, &p).unwrap();
        let (_, a) = estimate_track(&mag, psd.clone(), &sched, &p).unwrap();
        let c = 3.0;
        let (_, b) =
            estimate_track(&mag.map(|v| v * c), psd.map(|v| v * c * c), &sched, &p).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((c * x - y).abs() <= 1e-9 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = params();
        let s = random_spectrogram(14, 3000);
        let track = SnrTrack {
            zeta: RealGrid::filled(2, 257, 1.0),
            gamma: RealGrid::filled(2, 257, 1.0),
            noise_psd: RealGrid::filled(2, 257, 1.0),
        };
        assert!(enhance_acoustic(&s, &track, &p).is_err());
    }

    mod props {
        use super::{estimate_track, BinSchedule, RealGrid, StsaParams};
        use proptest::prelude::*;
        use rand::{Rng as _, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn output_nonnegative_and_finite(seed in any::<u64>(), level in -8.0f64..2.0) {
                let p = StsaParams::default();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let frames = 20;
                let mag = RealGrid::from_fn(frames, 257, |_, _| {
                    let v: f64 = rng.random_range(0.0..1.0);
                    if v < 0.05 { 0.0 } else { v * 10f64.powf(level) }
                });
                let psd = RealGrid::from_fn(frames, 257, |_, _| 10f64.powf(rng.random_range(-10.0..0.0)));
                let sched = BinSchedule::new(257, 512, 16000.0, &p).unwrap();
                let (track, est) = estimate_track(&mag, psd, &sched, &p).unwrap();
                prop_assert!(est.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
                prop_assert!(track.gamma.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
            }
        }
    }
}
