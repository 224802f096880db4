//! Minimal RIFF/WAVE reader for 16-bit PCM.

use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

/// All decoded clips are resampled to this rate.
pub const TARGET_SAMPLE_RATE: u32 = 16_000;

/// Decode a PCM-16 WAV file to a mono clip at 16 kHz.
///
/// Stereo channels are averaged, samples are scaled by 1/32768, and clips at
/// other rates are resampled with linear interpolation.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: String| Error::format(path, msg);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(fail("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut offset = 12;
    while offset + 8 <= bytes.len() {
        let chunk_id = &bytes[offset..offset + 4];
        let chunk_len = u32::from_le_bytes(bytes[offset + 4..offset + 8].try_into().unwrap()) as usize;
        let body_start = offset + 8;
        let body_end = (body_start + chunk_len).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match chunk_id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(fail("fmt chunk truncated".into()));
                }
                let audio_format = u16::from_le_bytes([body[0], body[1]]);
                let num_channels = u16::from_le_bytes([body[2], body[3]]);
                let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits_per_sample = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((audio_format, num_channels, sample_rate, bits_per_sample));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        offset = body_start + chunk_len + (chunk_len & 1);
    }

    let (audio_format, num_channels, sample_rate, bits_per_sample) =
        fmt.ok_or_else(|| fail("missing fmt chunk".into()))?;
    if audio_format != 1 {
        return Err(fail(format!(
            "unsupported audio_format {audio_format} (only PCM = 1)"
        )));
    }
    if bits_per_sample != 16 {
        return Err(fail(format!(
            "unsupported bits_per_sample {bits_per_sample} (only 16)"
        )));
    }
    if !(num_channels == 1 || num_channels == 2) {
        return Err(fail(format!(
            "unsupported num_channels {num_channels} (only mono or stereo)"
        )));
    }
    if sample_rate == 0 {
        return Err(fail("sample_rate is zero".into()));
    }
    let data = data.ok_or_else(|| fail("missing data chunk".into()))?;

    let frame_bytes = 2 * num_channels as usize;
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(fail("data chunk holds no samples".into()));
    }
    let mut samples = Vec::with_capacity(n_frames);
    for frame in 0..n_frames {
        let base = frame * frame_bytes;
        let mut acc = 0.0;
        for ch in 0..num_channels as usize {
            let lo = data[base + 2 * ch];
            let hi = data[base + 2 * ch + 1];
            let value = i16::from_le_bytes([lo, hi]) as f64 / 32768.0;
            acc += value;
        }
        samples.push(acc / num_channels as f64);
    }

    if sample_rate != TARGET_SAMPLE_RATE {
        samples = resample_linear(&samples, sample_rate, TARGET_SAMPLE_RATE);
    }
    AudioClip::new(samples, TARGET_SAMPLE_RATE)
}

/// Linear-interpolation resampling. Output length covers the same duration:
/// floor((n-1) * to/from) + 1 samples.
fn resample_linear(input: &[f64], from: u32, to: u32) -> Vec<f64> {
    let ratio = from as f64 / to as f64;
    let out_len = ((input.len() - 1) as f64 * to as f64 / from as f64).floor() as usize + 1;
    let mut output = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let pos = i as f64 * ratio;
        let idx = pos.floor() as usize;
        if idx + 1 >= input.len() {
            output.push(input[input.len() - 1]);
        } else {
            let frac = pos - idx as f64;
            output.push(input[idx] + (input[idx + 1] - input[idx]) * frac);
        }
    }
    output
}

/// Encode a mono or stereo PCM-16 WAV; values are clamped to i16 range.
pub fn encode_wav(
    path: impl AsRef<Path>,
    channels: &[Vec<f64>],
    sample_rate: u32,
) -> Result<()> {
    let path = path.as_ref();
    let num_channels = channels.len() as u16;
    assert!(num_channels == 1 || num_channels == 2);
    let n_frames = channels[0].len();
    assert!(channels.iter().all(|c| c.len() == n_frames));

    let data_len = (n_frames * 2 * num_channels as usize) as u32;
    let mut bytes = Vec::with_capacity(44 + data_len as usize);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&num_channels.to_le_bytes());
    bytes.extend_from_slice(&sample_rate.to_le_bytes());
    let byte_rate = sample_rate * 2 * num_channels as u32;
    bytes.extend_from_slice(&byte_rate.to_le_bytes());
    bytes.extend_from_slice(&(2 * num_channels).to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    for frame in 0..n_frames {
        for channel in channels {
            let v = (channel[frame] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
