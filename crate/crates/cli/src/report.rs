//! `psyfuse report`

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use psyfuse_core::metrics::MetricReport;

use crate::Outcome;

struct Cell {
    noise: String,
    snr: f64,
    method: String,
    n: usize,
    estoi: f64,
    seg_snr: f64,
}

pub fn read_rows(paths: &[PathBuf]) -> anyhow::Result<Vec<MetricReport>> {
    let mut rows = Vec::new();
    for p in paths {
        let mut r =
            csv::Reader::from_path(p).with_context(|| format!("reading {}", p.display()))?;
        for row in r.deserialize() {
            rows.push(row.with_context(|| format!("parsing {}", p.display()))?);
        }
    }
    Ok(rows)
}

/// Mean ESTOI and segSNR per (noise, SNR, method), sorted on those keys.
fn aggregate(rows: &[MetricReport]) -> Vec<Cell> {
    let mut cells: Vec<Cell> = Vec::new();
    for r in rows {
        let hit = cells.iter_mut().find(|c| {
            c.noise == r.noise_type && c.snr.total_cmp(&r.snr_db).is_eq() && c.method == r.method
        });
        let cell = match hit {
            Some(c) => c,
            None => {
                cells.push(Cell {
                    noise: r.noise_type.clone(),
                    snr: r.snr_db,
                    method: r.method.clone(),
                    n: 0,
                    estoi: 0.0,
                    seg_snr: 0.0,
                });
                cells.last_mut().expect("just pushed")
            }
        };
        cell.n += 1;
        cell.estoi += r.estoi;
        cell.seg_snr += r.seg_snr_db;
    }
    for c in &mut cells {
        c.estoi /= c.n as f64;
        c.seg_snr /= c.n as f64;
    }
    cells.sort_by(|a, b| {
        a.noise
            .cmp(&b.noise)
            .then(a.snr.total_cmp(&b.snr))
            .then(a.method.cmp(&b.method))
    });
    cells
}

pub fn markdown(rows: &[MetricReport]) -> String {
    let mut s = String::from(
        "| Noise | SNR (dB) | Method | N | ESTOI | segSNR (dB) |\n|---|---:|---|---:|---:|---:|\n",
    );
    for c in aggregate(rows) {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.4} | {:.2} |",
            c.noise, c.snr, c.method, c.n, c.estoi, c.seg_snr
        );
    }
    s
}

pub fn run(csvs: &[PathBuf], out: &Path) -> Outcome {
    let rows = read_rows(csvs)?;
    ensure!(!rows.is_empty(), "no rows in the given CSV files");
    std::fs::write(out, markdown(&rows)).with_context(|| format!("writing {}", out.display()))?;
    Ok(0)
}
