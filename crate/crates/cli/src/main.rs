//! `psyfuse`: corpus mixing, enhancement, evaluation and reporting.

mod enhance;
mod eval;
mod files;
mod manifest;
mod mix;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use psyfuse_core::pipeline::EnhancementMode;

#[derive(Parser)]
#[command(name = "psyfuse", version, about = "Fusion speech enhancement toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mix clean utterances with a noise recording at the given SNRs.
    Mix {
        /// Clean WAV file or directory of WAV files.
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        /// Comma-separated SNRs in dB.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        snr: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise label used in output names; defaults to the noise file stem.
        #[arg(long)]
        noise_type: Option<String>,
        #[arg(long, default_value_t = psyfuse_core::corpus::DEFAULT_LEAD_NOISE_MS)]
        lead_ms: f64,
        #[arg(long, default_value_t = 16000.0)]
        sample_rate: f64,
    },
    /// Enhance one WAV file or every WAV file in a directory.
    Enhance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the mode in the config file.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// JSON config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// True noise (file, or directory matched by stem) for the oracle noise PSD.
        #[arg(long)]
        noise_ref: Option<PathBuf>,
        /// Directory receiving magnitude matrices as CSV.
        #[arg(long)]
        dump_spectra: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score processed files against clean references matched by file stem.
    Eval {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        processed: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// Method label; defaults to the processed directory name.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Average evaluation CSVs into a noise x SNR x method markdown table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        markdown: PathBuf,
    },
    /// Print the default enhancement config as JSON.
    Defaults,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fusion,
    Acoustic,
    Modmask,
    Modssub,
}

impl From<ModeArg> for EnhancementMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fusion => EnhancementMode::Fusion,
            ModeArg::Acoustic => EnhancementMode::AcousticOnly,
            ModeArg::Modmask => EnhancementMode::ModmaskOnly,
            ModeArg::Modssub => EnhancementMode::ModssubOnly,
        }
    }
}

/// Number of files that failed; errors that stop a whole command are
/// returned as `Err` instead.
pub type Outcome = anyhow::Result<usize>;

fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        anyhow::ensure!(j > 0, "--jobs must be at least 1");
        b = b.num_threads(j);
    }
    Ok(b.build()?)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Mix {
            clean,
            noise,
            snr,
            out,
            seed,
            noise_type,
            lead_ms,
            sample_rate,
        } => mix::run(mix::Args {
            clean,
            noise,
            snrs: snr,
            out,
            seed,
            noise_type,
            lead_ms,
            sample_rate,
        }),
        Command::Enhance {
            input,
            out,
            mode,
            config,
            noise_ref,
            dump_spectra,
            jobs,
        } => enhance::run(
            enhance::Args {
                input,
                out,
                mode: mode.map(Into::into),
                config,
                noise_ref,
                dump_spectra,
            },
            &thread_pool(jobs)?,
        ),
        Command::Eval {
            clean,
            processed,
            csv,
            method,
            jobs,
        } => eval::run(&clean, &processed, &csv, method, &thread_pool(jobs)?),
        Command::Report { csv, markdown } => report::run(&csv, &markdown),
        Command::Defaults => {
            let cfg = psyfuse_core::pipeline::EnhancementConfig::default();
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("psyfuse: {n} file(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("psyfuse: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
