//! Audio files, resampling, active speech level and test-stimulus mixing.

pub mod fixtures;
mod mix;
mod p56;
mod resample;
mod wav;

pub use mix::{
    active_span_snr_db, mix_at_snr, mix_signals, MixSpec, Mixture, NoiseOffsetPolicy,
    DEFAULT_LEAD_NOISE_MS, MIN_LEAD_FOR_MODULATION_MS,
};
pub use p56::{active_speech_level, activity_mask, ActiveLevel};
pub use resample::{resample_to, resample_with, FilterDesign, Resampler};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav, WriteReport};
