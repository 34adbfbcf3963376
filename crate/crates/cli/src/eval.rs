//! `psyfuse eval`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use psyfuse_core::corpus::{read_wav, resample_to};
use psyfuse_core::metrics::{estoi, segmental_snr, MetricReport};
use rayon::prelude::*;

use crate::files::{parse_mixture_stem, stem, wav_inputs};
use crate::Outcome;

fn by_stem(dir: &Path) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        bail!("{}: not a directory", dir.display());
    }
    Ok(wav_inputs(dir)?
        .into_iter()
        .map(|p| (stem(&p), p))
        .collect())
}

fn score(name: &str, clean: &Path, processed: &Path, method: &str) -> anyhow::Result<MetricReport> {
    let x = read_wav(clean)?;
    let y = resample_to(&read_wav(processed)?, x.sample_rate_hz())?;
    let (utterance_id, noise_type, snr_db) =
        parse_mixture_stem(name).unwrap_or_else(|| (name.to_string(), String::new(), f64::NAN));
    Ok(MetricReport {
        utterance_id,
        noise_type,
        snr_db,
        method: method.to_string(),
        estoi: estoi(&x, &y)?,
        seg_snr_db: segmental_snr(&x, &y)?,
    })
}

pub fn run(
    clean: &Path,
    processed: &Path,
    csv: &Path,
    method: Option<String>,
    pool: &rayon::ThreadPool,
) -> Outcome {
    let clean_files = by_stem(clean)?;
    let processed_files = by_stem(processed)?;
    let method = method.unwrap_or_else(|| stem(processed));
    let mut unmatched = 0;
    for (s, p) in clean_files
        .iter()
        .filter(|(s, _)| !processed_files.contains_key(*s))
    {
        eprintln!(
            "unmatched: {} has no processed counterpart ({s})",
            p.display()
        );
        unmatched += 1;
    }
    for (s, p) in processed_files
        .iter()
        .filter(|(s, _)| !clean_files.contains_key(*s))
    {
        eprintln!("unmatched: {} has no clean reference ({s})", p.display());
        unmatched += 1;
    }
    let pairs: Vec<(&String, &PathBuf, &PathBuf)> = clean_files
        .iter()
        .filter_map(|(s, c)| processed_files.get(s).map(|p| (s, c, p)))
        .collect();
    if pairs.is_empty() {
        bail!(
            "no file stems in common between {} and {}",
            clean.display(),
            processed.display()
        );
    }
    let results: Vec<anyhow::Result<MetricReport>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(s, c, p)| score(s, c, p, &method).with_context(|| s.to_string()))
            .collect()
    });

    if let Some(parent) = csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::files::create_dir(parent)?;
    }
    let mut w =
        csv::Writer::from_path(csv).with_context(|| format!("creating {}", csv.display()))?;
    let mut failed = unmatched;
    for r in results {
        match r {
            Ok(row) => w.serialize(row).context("writing CSV")?,
            Err(e) => {
                eprintln!("{e:#}");
                failed += 1;
            }
        }
    }
    w.flush().context("writing CSV")?;
    Ok(failed)
}
