#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod dsp;
pub mod error;
pub mod fusion;
pub mod grid;
pub mod metrics;
pub mod modmask;
pub mod pipeline;
pub mod specfun;
pub mod stsa;

pub use dsp::{AnalysisConfig, Spectrogram, Waveform, WindowKind};
pub use error::{Error, Result, WavError};
pub use grid::{Grid, RealGrid};
pub use metrics::MetricReport;
pub use pipeline::{enhance, EnhancementConfig, EnhancementMode};
pub use stsa::{SnrTrack, StsaParams};
