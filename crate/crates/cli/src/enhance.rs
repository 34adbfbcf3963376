//! `psyfuse enhance`

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use psyfuse_core::corpus::{read_wav, resample_to};
use psyfuse_core::pipeline::{enhance_detailed, EnhancementConfig, EnhancementMode};
use psyfuse_core::stsa::NoisePsdMode;
use psyfuse_core::Waveform;
use rayon::prelude::*;

use crate::files::{create_dir, stem, wav_inputs, write_matrix};
use crate::manifest::{display, Entry, RunManifest};
use crate::mix::write_checked;
use crate::Outcome;

/// The pipeline's native rate; other inputs are resampled to it.
const PIPELINE_RATE_HZ: f64 = 16000.0;

pub struct Args {
    pub input: PathBuf,
    pub out: PathBuf,
    pub mode: Option<EnhancementMode>,
    pub config: Option<PathBuf>,
    pub noise_ref: Option<PathBuf>,
    pub dump_spectra: Option<PathBuf>,
}

pub fn load_config(
    path: Option<&Path>,
    mode: Option<EnhancementMode>,
) -> anyhow::Result<EnhancementConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("config {}", p.display()))?
        }
        None => EnhancementConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate_for(PIPELINE_RATE_HZ)
        .context("invalid config")?;
    Ok(cfg)
}

fn needs_noise_ref(cfg: &EnhancementConfig) -> bool {
    cfg.noise_psd_mode == NoisePsdMode::Oracle
        && matches!(
            cfg.mode,
            EnhancementMode::Fusion | EnhancementMode::AcousticOnly
        )
}

struct Job {
    input: PathBuf,
    noise_ref: Option<PathBuf>,
    output: PathBuf,
}

fn plan(a: &Args, cfg: &EnhancementConfig) -> anyhow::Result<Vec<Job>> {
    if !a.input.exists() {
        bail!("{}: no such file or directory", a.input.display());
    }
    if let Some(r) = &a.noise_ref {
        if !r.exists() {
            bail!("{}: no such file or directory", r.display());
        }
    }
    if needs_noise_ref(cfg) && a.noise_ref.is_none() {
        bail!("oracle noise PSD mode needs --noise-ref (or set \"noise_psd_mode\": \"blind\")");
    }
    if a.input.is_file() {
        if a.noise_ref.as_ref().is_some_and(|r| r.is_dir()) {
            bail!("--noise-ref must be a file when --in is a file");
        }
        if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        return Ok(vec![Job {
            input: a.input.clone(),
            noise_ref: a.noise_ref.clone(),
            output: a.out.clone(),
        }]);
    }
    if a.noise_ref.as_ref().is_some_and(|r| r.is_file()) {
        bail!("--noise-ref must be a directory when --in is a directory");
    }
    create_dir(&a.out)?;
    Ok(wav_inputs(&a.input)?
        .into_iter()
        .map(|input| {
            let name = format!("{}.wav", stem(&input));
            Job {
                noise_ref: a.noise_ref.as_ref().map(|d| d.join(&name)),
                output: a.out.join(&name),
                input,
            }
        })
        .collect())
}

fn read_16k(path: &Path) -> anyhow::Result<Waveform> {
    Ok(resample_to(&read_wav(path)?, PIPELINE_RATE_HZ)?)
}

fn process(job: &Job, cfg: &EnhancementConfig, dump: Option<&Path>) -> anyhow::Result<Vec<String>> {
    let noisy = read_16k(&job.input)?;
    let noise = match (&job.noise_ref, needs_noise_ref(cfg)) {
        (Some(p), true) => Some(read_16k(p)?),
        _ => None,
    };
    let d = enhance_detailed(&noisy, noise.as_ref(), cfg)?;
    let mut notes = Vec::new();
    write_checked(&job.output, &d.output, &mut notes)?;
    if let Some(dir) = dump {
        let s = stem(&job.input);
        let mats = [
            ("noisy", Some(&d.noisy_mag)),
            ("acoustic", d.acoustic_mag.as_ref()),
            ("modulation", d.modulation_mag.as_ref()),
            ("output", Some(&d.output_mag)),
        ];
        for (tag, m) in mats {
            if let Some(m) = m {
                write_matrix(&dir.join(format!("{s}.{tag}.csv")), m)?;
            }
        }
    }
    if d.clamped_fraction > 0.0 {
        notes.push(format!(
            "{:.4}% of modulation-path magnitudes clamped at zero",
            100.0 * d.clamped_fraction
        ));
    }
    Ok(notes)
}

pub fn run(a: Args, pool: &rayon::ThreadPool) -> Outcome {
    let cfg = load_config(a.config.as_deref(), a.mode)?;
    let jobs = plan(&a, &cfg)?;
    if let Some(d) = &a.dump_spectra {
        create_dir(d)?;
    }
    let entries: Vec<Entry> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let (status, notes) = match process(job, &cfg, a.dump_spectra.as_deref()) {
                    Ok(notes) => ("ok".to_string(), notes),
                    Err(e) => {
                        eprintln!("{}: {e:#}", job.input.display());
                        (format!("{e:#}"), Vec::new())
                    }
                };
                let mut inputs = vec![display(&job.input)];
                inputs.extend(job.noise_ref.as_deref().map(display));
                Entry {
                    inputs,
                    outputs: vec![display(&job.output)],
                    status,
                    notes,
                }
            })
            .collect()
    });
    let manifest_path = if a.input.is_file() {
        a.out.with_extension("manifest.json")
    } else {
        a.out.join("manifest.json")
    };
    let manifest = RunManifest {
        config: Some(cfg),
        entries,
        ..RunManifest::new("enhance")
    };
    manifest.write(&manifest_path)?;
    Ok(manifest.failures())
}
