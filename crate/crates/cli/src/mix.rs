//! `psyfuse mix`

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure};
use psyfuse_core::corpus::{mix_signals, read_wav, resample_to, write_wav, NoiseOffsetPolicy};
use psyfuse_core::Waveform;

use crate::files::{create_dir, fnv1a, mixture_stem, stem, wav_inputs};
use crate::manifest::{display, Entry, RunManifest};
use crate::Outcome;

pub struct Args {
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub snrs: Vec<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub noise_type: Option<String>,
    pub lead_ms: f64,
    pub sample_rate: f64,
}

/// Offset seed of one mixture, so that adding files or SNRs leaves the
/// others unchanged.
fn mixture_seed(seed: u64, name: &str) -> u64 {
    seed ^ fnv1a(name.as_bytes())
}

pub fn run(a: Args) -> Outcome {
    for p in [&a.clean, &a.noise] {
        if !p.exists() {
            bail!("{}: no such file or directory", p.display());
        }
    }
    ensure!(
        a.snrs.iter().all(|s| s.is_finite()),
        "--snr values must be finite"
    );
    ensure!(a.sample_rate > 0.0, "--sample-rate must be positive");
    let noise = resample_to(&read_wav(&a.noise)?, a.sample_rate)?;
    let label = a.noise_type.clone().unwrap_or_else(|| stem(&a.noise));
    let cleans = wav_inputs(&a.clean)?;
    ensure!(!cleans.is_empty(), "{}: no WAV files", a.clean.display());

    let dirs = ["noisy", "clean", "noise"].map(|d| a.out.join(d));
    for d in &dirs {
        create_dir(d)?;
    }
    let mut manifest = RunManifest::new("mix");
    manifest.seed = Some(a.seed);
    for path in &cleans {
        let clean = read_wav(path).and_then(|w| resample_to(&w, a.sample_rate));
        for &snr in &a.snrs {
            let name = mixture_stem(&stem(path), &label, snr);
            let outputs: Vec<PathBuf> =
                dirs.iter().map(|d| d.join(format!("{name}.wav"))).collect();
            let mut notes = Vec::new();
            let status = match &clean {
                Ok(c) => match write_mixture(c, &noise, snr, &a, &name, &outputs, &mut notes) {
                    Ok(()) => "ok".to_string(),
                    Err(e) => format!("{e:#}"),
                },
                Err(e) => e.to_string(),
            };
            if status != "ok" {
                eprintln!("{name}: {status}");
            }
            manifest.entries.push(Entry {
                inputs: vec![display(path), display(&a.noise)],
                outputs: outputs.iter().map(|p| display(p)).collect(),
                status,
                notes,
            });
        }
    }
    manifest.write(&a.out.join("manifest.json"))?;
    Ok(manifest.failures())
}

fn write_mixture(
    clean: &Waveform,
    noise: &Waveform,
    snr: f64,
    a: &Args,
    name: &str,
    outputs: &[PathBuf],
    notes: &mut Vec<String>,
) -> anyhow::Result<()> {
    let policy = NoiseOffsetPolicy::SeededRandom(mixture_seed(a.seed, name));
    let m = mix_signals(clean, noise, snr, policy, a.lead_ms)?;
    for (w, p) in [&m.noisy, &m.clean, &m.noise].into_iter().zip(outputs) {
        write_checked(p, w, notes)?;
    }
    Ok(())
}

pub fn write_checked(path: &Path, w: &Waveform, notes: &mut Vec<String>) -> anyhow::Result<()> {
    let report = write_wav(path, w)?;
    if report.clipped > 0 {
        notes.push(format!(
            "{}: {} samples clipped",
            display(path),
            report.clipped
        ));
    }
    Ok(())
}
