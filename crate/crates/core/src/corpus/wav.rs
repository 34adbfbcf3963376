//! 16-bit PCM mono RIFF/WAVE reading and writing.

use std::fs;
use std::path::Path;

use crate::dsp::Waveform;
use crate::error::{Error, Result, WavError};

const PCM: u16 = 1;
const EXTENSIBLE: u16 = 0xFFFE;
const SCALE: f64 = 32768.0;

/// Outcome of encoding samples to 16-bit PCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    /// Samples that fell outside `[-1, 32767/32768]` and were clipped.
    pub clipped: usize,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a complete WAV file image.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotRiffWave);
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if id == b"fmt " {
            if size < 16 || body + size > bytes.len() {
                return Err(WavError::MalformedHeader(format!(
                    "fmt chunk of {size} bytes"
                )));
            }
            let mut tag = u16_at(bytes, body);
            let channels = u16_at(bytes, body + 2);
            let rate = u32_at(bytes, body + 4);
            let bits = u16_at(bytes, body + 14);
            if tag == EXTENSIBLE && size >= 40 {
                // First two bytes of the sub-format GUID carry the real tag.
                tag = u16_at(bytes, body + 24);
            }
            format = Some((tag, channels, rate, bits));
        } else if id == b"data" {
            let (tag, channels, rate, bits) = format.ok_or(WavError::MissingChunk("fmt"))?;
            if tag != PCM || bits != 16 {
                return Err(WavError::UnsupportedEncoding {
                    format_tag: tag,
                    bits_per_sample: bits,
                });
            }
            if channels != 1 {
                return Err(WavError::NotMono(channels));
            }
            if rate == 0 {
                return Err(WavError::MalformedHeader("sample rate of 0 Hz".into()));
            }
            let available = bytes.len() - body;
            if size > available {
                return Err(WavError::TruncatedData {
                    expected: size,
                    actual: available,
                });
            }
            if !size.is_multiple_of(2) {
                return Err(WavError::MalformedHeader(format!(
                    "odd data chunk size {size}"
                )));
            }
            let samples: Vec<f64> = bytes[body..body + size]
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / SCALE)
                .collect();
            if samples.is_empty() {
                return Err(WavError::MalformedHeader("empty data chunk".into()));
            }
            return Waveform::new(samples, rate as f64)
                .map_err(|e| WavError::MalformedHeader(e.to_string()));
        }
        // Chunks are word aligned.
        pos = body + size + (size & 1);
    }
    Err(WavError::MissingChunk(if format.is_some() {
        "data"
    } else {
        "fmt"
    }))
}

/// Quantises to 16-bit PCM with round-to-nearest.
pub fn encode_wav(w: &Waveform) -> Result<(Vec<u8>, WriteReport)> {
    let rate = w.sample_rate_hz();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::Input(format!(
            "sample rate {rate} Hz is not representable in a WAV header"
        )));
    }
    let rate = rate as u32;
    let data_len = w.len() * 2;
    if data_len > (u32::MAX - 36) as usize {
        return Err(Error::Input("signal too long for a RIFF file".into()));
    }
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    let mut report = WriteReport::default();
    for &x in w.samples() {
        let v = (x * SCALE).round();
        let q = if v > i16::MAX as f64 {
            report.clipped += 1;
            i16::MAX
        } else if v < i16::MIN as f64 {
            report.clipped += 1;
            i16::MIN
        } else {
            v as i16
        };
        out.extend_from_slice(&q.to_le_bytes());
    }
    Ok((out, report))
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(decode_wav(&bytes)?)
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<WriteReport> {
    let path = path.as_ref();
    let (bytes, report) = encode_wav(w)?;
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(report)
}
