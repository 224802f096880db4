//! Audio decoding and MFCC feature extraction.
//!
//! The pipeline turns a PCM waveform into the three-channel tensor used as a
//! spectrogram image: static MFCCs, their delta coefficients, and the deltas
//! of the deltas. Channels can be exported as a plain-text tensor dump
//! (`.tns`) or flattened into a feature-table row.

mod mfcc;
mod wav;

pub use mfcc::{
    compute_mfcc, dct_matrix, delta, hz_to_mel, mel_filter_centers, mel_filterbank,
    mel_spectrogram, mel_to_hz, MfccParams, MfccStack,
};
pub use wav::{decode_wav, encode_wav, TARGET_SAMPLE_RATE};

use crate::error::{Error, Result};

/// Mono waveform with samples in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio clip has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(bad) = samples
            .iter()
            .find(|s| !s.is_finite() || s.abs() > 1.0 + 1e-9)
        {
            return Err(Error::invalid(format!(
                "sample {bad} outside [-1, 1]"
            )));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}
