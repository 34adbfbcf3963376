//! File discovery and naming conventions.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use psyfuse_core::RealGrid;

/// `path` itself if it is a file, otherwise the `.wav` files inside it,
/// sorted by path.
pub fn wav_inputs(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        bail!("{}: no such file or directory", path.display());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(path).with_context(|| format!("reading {}", path.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Name of one mixture: `{utterance}__{noise}__{snr}dB`.
pub fn mixture_stem(utterance: &str, noise: &str, snr_db: f64) -> String {
    format!("{utterance}__{noise}__{snr_db}dB")
}

/// Inverse of [`mixture_stem`]; `None` for other names.
pub fn parse_mixture_stem(stem: &str) -> Option<(String, String, f64)> {
    let mut parts = stem.rsplitn(3, "__");
    let snr = parts.next()?.strip_suffix("dB")?.parse().ok()?;
    let noise = parts.next()?;
    let utt = parts.next()?;
    Some((utt.to_string(), noise.to_string(), snr))
}

/// FNV-1a; stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// One row per frame, comma-separated bins.
pub fn write_matrix(path: &Path, m: &RealGrid) -> anyhow::Result<()> {
    let mut w = std::io::BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for row in m.rows_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}
