//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#[path = "../../core/tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use psyfuse_core::corpus::fixtures::{noise, speech_like, NoiseKind};
use psyfuse_core::corpus::{
    active_span_snr_db, active_speech_level, mix_signals, NoiseOffsetPolicy,
};
use psyfuse_core::dsp::{istft, split_mag_phase, stft, AnalysisConfig};
use psyfuse_core::fusion::{fuse, fusion_weight, FusionConfig};
use psyfuse_core::metrics::estoi;
use psyfuse_core::modmask::{apply_modulation_gain, binary_gain, ModMaskParams};
use psyfuse_core::pipeline::{enhance, EnhancementConfig, EnhancementMode};
use psyfuse_core::specfun::kummer_m1;
use psyfuse_core::stsa::{alpha_schedule, beta_schedule, gain, StsaParams};
use psyfuse_core::{RealGrid, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 16000.0;
const UTTERANCES: u64 = 10;

/// A passing detail line, or why it failed.
type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `n` points evenly spaced over `[lo, hi]`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn utterance(u: u64) -> Waveform {
    speech_like(1000 + u, FS, 3.0)
}

fn mixture(u: u64, kind: NoiseKind, snr: f64) -> psyfuse_core::corpus::Mixture {
    let n = noise(kind, 2000 + u, FS, 4.0);
    mix_signals(
        &utterance(u),
        &n,
        snr,
        NoiseOffsetPolicy::SeededRandom(u),
        300.0,
    )
    .unwrap()
}

fn c1_stft_round_trip() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for (cfg, rate, len) in [
        (AnalysisConfig::ACOUSTIC_16K, FS, 16000),
        (AnalysisConfig::MODULATION, 62.5, 400),
    ] {
        for _ in 0..10 {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = Waveform::new(x.clone(), rate).unwrap();
            let y = istft(&stft(&w, &cfg).unwrap()).unwrap();
            let r = cfg.interior(len);
            let err: f64 = r
                .clone()
                .map(|i| (y.samples()[i] - x[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm: f64 = r.map(|i| x[i] * x[i]).sum::<f64>().sqrt();
            worst = worst.max(err / norm);
        }
    }
    ensure(worst < 1e-6, || format!("relative error {worst:e}"))?;
    within(t.elapsed(), 5.0)?;
    Ok(format!("worst relative error {worst:.1e}"))
}

fn c2_kummer() -> Check {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for a in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        for z in [0.0, -0.1, -1.0, -5.0, -20.0, -40.0] {
            let want = oracle::kummer_exact(a, z);
            let got = kummer_m1(a, z).map_err(|e| e.to_string())?;
            // M(2, 1; -1) is exactly zero.
            let e = if want.abs() < 1e-40 {
                got.abs()
            } else {
                rel(got, want)
            };
            worst = worst.max(e);
        }
    }
    ensure(worst < 1e-8, || format!("relative error {worst:e}"))?;
    let mut resid: f64 = 0.0;
    for a in [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5] {
        for z in [-0.1, -1.0, -5.0, -20.0, -40.0] {
            let m = |a: f64| kummer_m1(a, z).unwrap();
            let terms = [
                (1.0 - a) * m(a - 1.0),
                (2.0 * a - 1.0 + z) * m(a),
                -a * m(a + 1.0),
            ];
            let scale = terms
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
                .max(1e-300);
            resid = resid.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }
    ensure(resid < 1e-7, || format!("recurrence residual {resid:e}"))?;
    within(t.elapsed(), 10.0)?;
    Ok(format!(
        "worst relative error {worst:.1e}, recurrence residual {resid:.1e}"
    ))
}

fn snr_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for zdb in linspace(-15.0, 20.0, 21) {
        for gdb in linspace(-20.0, 30.0, 21) {
            g.push((db_to_lin(zdb), 1.0 + db_to_lin(gdb)));
        }
    }
    g
}

fn c3_mmse_reduction() -> Check {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (zeta, gamma) in snr_grid() {
        let got = gain(zeta, gamma, 0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max(rel(got, oracle::mmse_stsa_gain(zeta, gamma)));
    }
    ensure(worst < 1e-8, || format!("relative error {worst:e}"))?;
    within(t.elapsed(), 5.0)?;
    Ok(format!("441 points, worst relative error {worst:.1e}"))
}

fn c4_mu_monotone() -> Check {
    let mus = [1.0, 1.5, 2.0, 2.5, 3.0];
    let mut points: Vec<(f64, f64)> = linspace(-20.0, 30.0, 21)
        .into_iter()
        .map(|g| (1.0, 1.0 + db_to_lin(g)))
        .collect();
    points.extend(snr_grid());
    let mut violations = Vec::new();
    for (zeta, gamma) in &points {
        let g: Vec<f64> = mus
            .iter()
            .map(|&mu| gain(*zeta, *gamma, 0.0, 1.0, mu).unwrap())
            .collect();
        if !g.windows(2).all(|w| w[1] > w[0]) {
            violations.push(format!("ζ={zeta:.3}, γ={gamma:.3}: {g:?}"));
        }
    }
    ensure(violations.is_empty(), || {
        format!("{} violations, first {}", violations.len(), violations[0])
    })?;
    Ok(format!("{} grid points, zero violations", points.len()))
}

fn c5_high_snr() -> Check {
    let zeta = 1000.0;
    let g = gain(zeta, 1.0 + zeta, 0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let wiener = zeta / (1.0 + zeta);
    let e = rel(g, wiener);
    ensure(e < 0.02, || format!("deviation {:.3}%", 100.0 * e))?;
    Ok(format!(
        "G = {g:.5}, Wiener {wiener:.5}, deviation {:.3}%",
        100.0 * e
    ))
}

fn c6_schedules() -> Check {
    let p = StsaParams {
        tonotopic_l: 1.0,
        ..StsaParams::default()
    };
    let a = |f: f64| alpha_schedule(f, FS, &p).unwrap();
    let b = |f: f64| beta_schedule(f, FS, &p).unwrap();
    ensure(a(1000.0) == p.alpha_low, || {
        format!("α(1 kHz) = {}", a(1000.0))
    })?;
    ensure(a(FS / 2.0) == p.alpha_high, || {
        format!("α(fs/2) = {}", a(FS / 2.0))
    })?;
    ensure(b(0.0) == p.beta_low, || format!("β(0) = {}", b(0.0)))?;
    ensure(b(FS / 2.0) == p.beta_high, || {
        format!("β(fs/2) = {}", b(FS / 2.0))
    })?;
    let f = linspace(0.0, FS / 2.0, 1000);
    let mono = |s: &dyn Fn(f64) -> f64| f.windows(2).all(|w| s(w[1]) >= s(w[0]));
    ensure(mono(&a), || "α not monotone".into())?;
    ensure(mono(&b), || "β not monotone".into())?;
    Ok("endpoints exact, monotone over 1000 frequencies".into())
}

fn c7_mask_truth_table() -> Check {
    let params = ModMaskParams::default();
    let rate = FS / 256.0;
    let xi_db = [-40.0, -10.5, -10.000001, -10.0, -9.999999, 0.0, 25.0];
    let mut cases = 0;
    for m in 0..=32usize {
        let m_hz = m as f64 * rate / 64.0;
        for &d in &xi_db {
            let xi = 10f64.powf(d / 10.0);
            // Keep DC; otherwise keep iff low enough in modulation frequency and SNR at or above threshold.
            let truth = if m == 0 || (m_hz <= 4.0 && d >= -10.0) {
                1.0
            } else {
                0.0
            };
            let got = binary_gain(xi, m, &params, rate);
            ensure(got == truth, || {
                format!("m = {m} ({m_hz:.3} Hz), ξ = {d} dB: got {got}, want {truth}")
            })?;
            cases += 1;
        }
    }
    ensure(binary_gain(0.1, 4, &params, rate) == 1.0, || {
        "bin 4 at -10 dB dropped".into()
    })?;
    ensure(binary_gain(1e3, 5, &params, rate) == 0.0, || {
        "bin 5 retained".into()
    })?;
    Ok(format!(
        "{cases} cases, bin 4 = {:.3} Hz kept, bin 5 = {:.3} Hz dropped",
        4.0 * rate / 64.0,
        5.0 * rate / 64.0
    ))
}

fn c8_identity_mask() -> Check {
    let m = mixture(0, NoiseKind::White, 5.0);
    let spec = stft(&m.noisy, &AnalysisConfig::ACOUSTIC_16K).unwrap();
    let (mag, _) = split_mag_phase(&spec);
    let out = apply_modulation_gain(&mag, &AnalysisConfig::MODULATION, FS / 256.0, |_, _, _| 1.0)
        .map_err(|e| e.to_string())?;
    let err: f64 = mag
        .as_slice()
        .iter()
        .zip(out.magnitude.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = mag.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt();
    ensure(err / norm < 1e-6, || {
        format!("relative error {:e}", err / norm)
    })?;
    Ok(format!(
        "relative error {:.1e} over {} frames",
        err / norm,
        mag.rows()
    ))
}

fn c9_fusion() -> Check {
    let cfg = FusionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut psi: Vec<f64> = (0..100_000)
        .map(|_| rng.random_range(-40.0..60.0))
        .collect();
    ensure(
        psi.iter()
            .all(|&p| (0.2..=0.8).contains(&fusion_weight(p, &cfg))),
        || "Φ out of range".into(),
    )?;
    psi.sort_by(f64::total_cmp);
    ensure(
        psi.windows(2)
            .all(|w| fusion_weight(w[1], &cfg) >= fusion_weight(w[0], &cfg)),
        || "Φ not monotone".into(),
    )?;
    for p in [-40.0, 0.0, 1.999, 2.0] {
        ensure(fusion_weight(p, &cfg) == 0.2, || {
            format!("Φ({p}) = {}", fusion_weight(p, &cfg))
        })?;
    }
    for p in [16.0, 16.001, 40.0] {
        ensure(fusion_weight(p, &cfg) == 0.8, || {
            format!("Φ({p}) = {}", fusion_weight(p, &cfg))
        })?;
    }
    for _ in 0..100 {
        let (f, k) = (rng.random_range(1..20), rng.random_range(1..40));
        let a = RealGrid::from_fn(f, k, |_, _| rng.random_range(0.0..5.0));
        let m = RealGrid::from_fn(f, k, |_, _| rng.random_range(0.0..5.0));
        let psi = RealGrid::from_fn(f, 1, |_, _| rng.random_range(-10.0..30.0));
        let s = fuse(&a, &m, &psi, &cfg).map_err(|e| e.to_string())?;
        let ok = (0..f * k).all(|i| {
            let (x, y, z) = (a.as_slice()[i], m.as_slice()[i], s.as_slice()[i]);
            x.min(y) <= z && z <= x.max(y)
        });
        ensure(ok, || "fused magnitude outside its inputs".into())?;
    }
    Ok("range, monotonicity, endpoints and betweenness hold".into())
}

fn c10_mixing() -> Check {
    let mut worst: f64 = 0.0;
    for u in 0..UTTERANCES {
        for kind in NoiseKind::ALL {
            for snr in [0.0, 5.0, 10.0] {
                let m = mixture(u, kind, snr);
                let got = active_span_snr_db(&m.clean, &m.noise).map_err(|e| e.to_string())?;
                worst = worst.max((got - snr).abs());
            }
        }
    }
    ensure(worst <= 0.1, || format!("SNR off by {worst:.3} dB"))?;

    let amp = 0.1;
    let sine: Vec<f64> = (0..(4.0 * FS) as usize)
        .map(|i| amp * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / FS).sin())
        .collect();
    let asl = active_speech_level(&Waveform::new(sine, FS).unwrap())
        .unwrap()
        .asl_db;
    let rms_db = 20.0 * (amp / 2f64.sqrt()).log10();
    ensure((asl - rms_db).abs() < 0.5, || {
        format!("sine ASL {asl:.2} dB vs RMS {rms_db:.2} dB")
    })?;

    let mut worst_pad: f64 = 0.0;
    for u in 0..UTTERANCES {
        let x = utterance(u);
        let mut padded = x.samples().to_vec();
        padded.extend(std::iter::repeat_n(0.0, (2.0 * FS) as usize));
        let a = active_speech_level(&x).unwrap().asl_db;
        let b = active_speech_level(&x.with_samples(padded).unwrap())
            .unwrap()
            .asl_db;
        worst_pad = worst_pad.max((a - b).abs());
    }
    ensure(worst_pad <= 0.5, || {
        format!("appended silence moved ASL by {worst_pad:.3} dB")
    })?;
    Ok(format!(
        "90 mixtures within {worst:.4} dB; sine ASL - RMS = {:.3} dB; silence shift {worst_pad:.3} dB",
        asl - rms_db
    ))
}

fn c11_estoi() -> Check {
    let x = utterance(0);
    let self_score = estoi(&x, &x).map_err(|e| e.to_string())?;
    ensure(self_score >= 0.999, || {
        format!("estoi(x, x) = {self_score}")
    })?;
    for c in [0.5, 2.0] {
        let y = x
            .with_samples(x.samples().iter().map(|v| v * c).collect())
            .unwrap();
        let s = estoi(&x, &y).unwrap();
        ensure(s >= 0.999, || format!("estoi(x, {c}x) = {s}"))?;
    }
    let snrs = [0.0, 5.0, 10.0, 20.0];
    let means: Vec<f64> = snrs
        .iter()
        .map(|&snr| {
            (0..UTTERANCES)
                .map(|u| {
                    let m = mixture(u, NoiseKind::White, snr);
                    estoi(&m.clean, &m.noisy).unwrap()
                })
                .sum::<f64>()
                / UTTERANCES as f64
        })
        .collect();
    ensure(means.windows(2).all(|w| w[1] > w[0]), || {
        format!("means {means:?}")
    })?;
    Ok(format!(
        "self {self_score:.4}; mean ESTOI at 0/5/10/20 dB: {}",
        fmt_list(&means)
    ))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" / ")
}

fn c12_end_to_end() -> Check {
    let t = Instant::now();
    let modes = [
        EnhancementMode::Fusion,
        EnhancementMode::AcousticOnly,
        EnhancementMode::ModmaskOnly,
    ];
    let mut lines = Vec::new();
    for snr in [0.0, 5.0] {
        // noisy, fusion, acoustic, modmask
        let mut sum = [0.0; 4];
        for u in 0..UTTERANCES {
            let m = mixture(u, NoiseKind::White, snr);
            sum[0] += estoi(&m.clean, &m.noisy).unwrap();
            for (i, mode) in modes.iter().enumerate() {
                let cfg = EnhancementConfig {
                    mode: *mode,
                    ..Default::default()
                };
                let y = enhance(&m.noisy, Some(&m.noise), &cfg).map_err(|e| e.to_string())?;
                sum[i + 1] += estoi(&m.clean, &y).unwrap();
            }
        }
        let [noisy, fused, acoustic, modmask] = sum.map(|s| s / UTTERANCES as f64);
        ensure(fused >= noisy, || {
            format!("{snr} dB: fused {fused:.4} < noisy {noisy:.4}")
        })?;
        let floor = acoustic.min(modmask) - 0.02;
        ensure(fused >= floor, || {
            format!("{snr} dB: fused {fused:.4} < min(paths) - 0.02 = {floor:.4}")
        })?;
        lines.push(format!(
            "{snr} dB noisy/fused/acoustic/modmask {}",
            fmt_list(&[noisy, fused, acoustic, modmask])
        ));
    }
    within(t.elapsed(), 120.0)?;
    Ok(lines.join("; "))
}

fn psyfuse(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_psyfuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || {
        format!(
            "psyfuse {}: {}",
            args[0],
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

/// Every file under `dir`, relative path to contents, sorted.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "wav" || x == "csv") {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn c13_determinism() -> Check {
    let src = tempfile::tempdir().map_err(|e| e.to_string())?;
    let clean_dir = src.path().join("clean");
    std::fs::create_dir(&clean_dir).unwrap();
    for u in 0..3 {
        psyfuse_core::corpus::write_wav(
            clean_dir.join(format!("utt{u}.wav")),
            &speech_like(u, FS, 2.0),
        )
        .unwrap();
    }
    let noise_file = src.path().join("white.wav");
    psyfuse_core::corpus::write_wav(&noise_file, &noise(NoiseKind::White, 5, FS, 4.0)).unwrap();

    let run = |root: &Path| -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
        let s = |p: PathBuf| p.to_str().unwrap().to_string();
        let mix = s(root.join("mix"));
        psyfuse(&[
            "mix",
            "--clean",
            &s(clean_dir.clone()),
            "--noise",
            &s(noise_file.clone()),
            "--snr",
            "0,5",
            "--out",
            &mix,
            "--seed",
            "42",
        ])?;
        psyfuse(&[
            "enhance",
            "--in",
            &s(root.join("mix/noisy")),
            "--noise-ref",
            &s(root.join("mix/noise")),
            "--out",
            &s(root.join("fusion")),
            "--jobs",
            "3",
        ])?;
        psyfuse(&[
            "eval",
            "--clean",
            &s(root.join("mix/clean")),
            "--processed",
            &s(root.join("fusion")),
            "--csv",
            &s(root.join("eval.csv")),
        ])?;
        Ok(tree(root))
    };
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    let (a, b) = (run(a_dir.path())?, run(b_dir.path())?);
    ensure(a.len() == 6 * 4 + 1, || {
        format!("expected 25 WAV/CSV files, found {}", a.len())
    })?;
    for ((pa, da), (pb, db)) in a.iter().zip(&b) {
        ensure(pa == pb && da == db, || {
            format!("{} differs between runs", pa.display())
        })?;
    }
    Ok(format!(
        "{} WAV/CSV files byte-identical across two runs",
        a.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("1 STFT round trip", c1_stft_round_trip),
        ("2 Kummer oracle", c2_kummer),
        ("3 MMSE-STSA reduction", c3_mmse_reduction),
        ("4 gain monotone in mu", c4_mu_monotone),
        ("5 high-SNR asymptote", c5_high_snr),
        ("6 schedule endpoints", c6_schedules),
        ("7 mask truth table", c7_mask_truth_table),
        ("8 identity-mask round trip", c8_identity_mask),
        ("9 fusion properties", c9_fusion),
        ("10 mixing accuracy", c10_mixing),
        ("11 ESTOI sanity", c11_estoi),
        ("12 end-to-end trend", c12_end_to_end),
        ("13 determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {why}");
            }
        }
    }
    println!("{} of 13 criteria passed", 13 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
