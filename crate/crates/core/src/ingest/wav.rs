//! Hand-rolled RIFF/WAVE codec.
//!
//! Decodes PCM16 and IEEE float32, mono or multichannel (channels are
//! averaged down to mono). Encoding writes mono PCM16, which is what the
//! synthetic dataset emitter needs.

use super::AudioClip;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn read_u16(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| Error::MalformedWav("truncated while reading u16".into()))
}

fn read_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::MalformedWav("truncated while reading u32".into()))
}

/// Decodes a RIFF/WAVE byte stream into a normalized mono clip.
///
/// PCM16 samples are scaled by 1/32768; float32 samples are taken as-is.
/// Multichannel input is averaged to mono sample-by-sample.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE signature".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).filter(|&e| e <= bytes.len());
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::MalformedWav("fmt chunk shorter than 16 bytes".into()));
                }
                let format = read_u16(bytes, body_start)?;
                let channels = read_u16(bytes, body_start + 2)?;
                let rate = read_u32(bytes, body_start + 4)?;
                let bits = read_u16(bytes, body_start + 14)?;
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => {
                let end = body_end.ok_or_else(|| {
                    Error::MalformedWav("data chunk size exceeds the file".into())
                })?;
                data = Some(&bytes[body_start..end]);
            }
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_start + size + (size & 1);
        if body_end.is_none() && id != b"data" {
            return Err(Error::MalformedWav("chunk size exceeds the file".into()));
        }
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;
    if channels == 0 {
        return Err(Error::MalformedWav("zero channels".into()));
    }
    if rate == 0 {
        return Err(Error::MalformedWav("zero sample rate".into()));
    }

    let sample_format = match (format, bits) {
        (FORMAT_PCM, 16) => SampleFormat::Pcm16,
        (FORMAT_IEEE_FLOAT, 32) => SampleFormat::Float32,
        (FORMAT_EXTENSIBLE, _) => {
            return Err(Error::UnsupportedWavCodec("WAVE_FORMAT_EXTENSIBLE".into()))
        }
        (f, b) => {
            return Err(Error::UnsupportedWavCodec(format!(
                "format tag {f} with {b} bits per sample"
            )))
        }
    };

    let bytes_per_sample = match sample_format {
        SampleFormat::Pcm16 => 2,
        SampleFormat::Float32 => 4,
    };
    let frame = bytes_per_sample * channels as usize;
    if data.is_empty() || data.len() < frame {
        return Err(Error::EmptyWav);
    }
    let n_frames = data.len() / frame;

    let mut samples = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let mut acc = 0.0f64;
        for ch in 0..channels as usize {
            let at = i * frame + ch * bytes_per_sample;
            let v = match sample_format {
                SampleFormat::Pcm16 => {
                    i16::from_le_bytes([data[at], data[at + 1]]) as f64 / 32768.0
                }
                SampleFormat::Float32 => f32::from_le_bytes([
                    data[at],
                    data[at + 1],
                    data[at + 2],
                    data[at + 3],
                ]) as f64,
            };
            if !v.is_finite() {
                return Err(Error::MalformedWav(format!("non-finite sample at frame {i}")));
            }
            acc += v;
        }
        samples.push(acc / channels as f64);
    }

    Ok(AudioClip { samples, sample_rate: rate })
}

/// Encodes a mono clip as PCM16 WAV. Samples are clamped to [-1, 1] and
/// quantized symmetrically (scale 32767).
pub fn encode_wav_pcm16(clip: &AudioClip) -> Vec<u8> {
    let n = clip.samples.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}
