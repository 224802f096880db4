//! MFCC extraction: Hann window, magnitude-squared FFT, triangular mel
//! filterbank on the HTK mel scale, log with floor, orthonormal DCT-II.

use std::path::Path;

use rustfft::{num_complex::Complex, FftPlanner};

use super::AudioClip;
use crate::error::{Error, Result};

/// MFCC pipeline parameters. Defaults assume 16 kHz input: 25 ms windows,
/// 10 ms hop, 64 mel filters over 125-7500 Hz, 13 coefficients.
#[derive(Debug, Clone)]
pub struct MfccParams {
    /// Analysis window length in samples; also the FFT length.
    pub win_len: usize,
    /// Hop between successive windows in samples.
    pub hop_len: usize,
    /// Number of triangular mel filters.
    pub n_filters: usize,
    /// Lower edge of the filterbank in Hz.
    pub fmin: f64,
    /// Upper edge of the filterbank in Hz.
    pub fmax: f64,
    /// Number of cepstral coefficients kept.
    pub n_coeffs: usize,
    /// Floor applied to mel energies before the log.
    pub log_floor: f64,
    /// Half-width of the delta regression window.
    pub delta_window: usize,
}

impl Default for MfccParams {
    fn default() -> Self {
        MfccParams {
            win_len: 400,
            hop_len: 160,
            n_filters: 64,
            fmin: 125.0,
            fmax: 7500.0,
            n_coeffs: 13,
            log_floor: 1e-10,
            delta_window: 2,
        }
    }
}

impl MfccParams {
    fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.win_len == 0 || self.hop_len == 0 {
            return Err(Error::invalid("window and hop must be positive"));
        }
        if self.n_filters == 0 || self.n_coeffs == 0 {
            return Err(Error::invalid("filter and coefficient counts must be positive"));
        }
        if self.n_coeffs > self.n_filters {
            return Err(Error::invalid(format!(
                "{} coefficients requested from {} filters",
                self.n_coeffs, self.n_filters
            )));
        }
        if !(self.fmin >= 0.0 && self.fmax > self.fmin) {
            return Err(Error::invalid("need 0 <= fmin < fmax"));
        }
        if self.fmax > sample_rate as f64 / 2.0 {
            return Err(Error::invalid(format!(
                "fmax {} Hz exceeds Nyquist {} Hz",
                self.fmax,
                sample_rate as f64 / 2.0
            )));
        }
        if self.delta_window == 0 {
            return Err(Error::invalid("delta window must be positive"));
        }
        if !self.log_floor.is_finite() || self.log_floor <= 0.0 {
            return Err(Error::invalid("log floor must be positive"));
        }
        Ok(())
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank as a dense `n_filters x (n_fft/2 + 1)` matrix.
/// Filter edges are spaced uniformly in mel between `fmin` and `fmax`;
/// weights ramp linearly in Hz.
pub fn mel_filterbank(
    sample_rate: f64,
    n_fft: usize,
    n_filters: usize,
    fmin: f64,
    fmax: f64,
) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_filters + 1) as f64))
        .collect();

    let mut bank = vec![vec![0.0; n_bins]; n_filters];
    for (f, filter) in bank.iter_mut().enumerate() {
        let (left, center, right) = (edges[f], edges[f + 1], edges[f + 2]);
        for (k, w) in filter.iter_mut().enumerate() {
            let freq = k as f64 * sample_rate / n_fft as f64;
            if freq > left && freq < right {
                *w = if freq <= center {
                    (freq - left) / (center - left)
                } else {
                    (right - freq) / (right - center)
                };
            }
        }
    }
    bank
}

/// Center frequencies (Hz) of the filters produced by [`mel_filterbank`].
pub fn mel_filter_centers(n_filters: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    (1..=n_filters)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_filters + 1) as f64))
        .collect()
}

/// First `n_rows` rows of the orthonormal DCT-II matrix for length `n_cols`.
pub fn dct_matrix(n_rows: usize, n_cols: usize) -> Vec<Vec<f64>> {
    let m = n_cols as f64;
    (0..n_rows)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / m).sqrt()
            } else {
                (2.0 / m).sqrt()
            };
            (0..n_cols)
                .map(|j| {
                    scale
                        * (std::f64::consts::PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * m))
                            .cos()
                })
                .collect()
        })
        .collect()
}

fn hann_window(len: usize) -> Vec<f64> {
    // periodic form, as used for STFT analysis
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect()
}

/// Pre-log mel energies, one row per frame. Frame count is
/// `floor((n_samples - win_len) / hop_len) + 1`.
pub fn mel_spectrogram(clip: &AudioClip, params: &MfccParams) -> Result<Vec<Vec<f64>>> {
    params.validate(clip.sample_rate())?;
    let samples = clip.samples();
    if samples.len() < params.win_len {
        return Err(Error::invalid(format!(
            "clip of {} samples is shorter than one {}-sample window",
            samples.len(),
            params.win_len
        )));
    }

    let n_bins = params.win_len / 2 + 1;
    let bank = mel_filterbank(
        clip.sample_rate() as f64,
        params.win_len,
        params.n_filters,
        params.fmin,
        params.fmax,
    );
    let window = hann_window(params.win_len);
    let fft = FftPlanner::new().plan_fft_forward(params.win_len);

    let n_frames = (samples.len() - params.win_len) / params.hop_len + 1;
    let mut frames = Vec::with_capacity(n_frames);
    let mut buffer = vec![Complex::new(0.0, 0.0); params.win_len];
    for t in 0..n_frames {
        let start = t * params.hop_len;
        for (b, (s, w)) in buffer
            .iter_mut()
            .zip(samples[start..start + params.win_len].iter().zip(&window))
        {
            *b = Complex::new(s * w, 0.0);
        }
        fft.process(&mut buffer);
        let power: Vec<f64> = buffer[..n_bins].iter().map(|c| c.norm_sqr()).collect();
        let energies: Vec<f64> = bank
            .iter()
            .map(|filter| filter.iter().zip(&power).map(|(w, p)| w * p).sum())
            .collect();
        frames.push(energies);
    }
    Ok(frames)
}

/// MFCC matrix of shape `T x n_coeffs`.
pub fn compute_mfcc(clip: &AudioClip, params: &MfccParams) -> Result<Vec<Vec<f64>>> {
    let energies = mel_spectrogram(clip, params)?;
    let dct = dct_matrix(params.n_coeffs, params.n_filters);
    Ok(energies
        .into_iter()
        .map(|row| {
            let logged: Vec<f64> = row.iter().map(|e| e.max(params.log_floor).ln()).collect();
            dct.iter()
                .map(|basis| basis.iter().zip(&logged).map(|(b, x)| b * x).sum())
                .collect()
        })
        .collect())
}

/// Regression-slope delta coefficients with replicate padding:
/// `d_t = sum_k k * (c_{t+k} - c_{t-k}) / (2 * sum_k k^2)`.
pub fn delta(matrix: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    assert!(window >= 1, "delta window must be positive");
    let t_len = matrix.len();
    if t_len == 0 {
        return Vec::new();
    }
    let n = matrix[0].len();
    let denom = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
    let clamp = |t: i64| matrix[t.clamp(0, t_len as i64 - 1) as usize].as_slice();

    (0..t_len as i64)
        .map(|t| {
            let mut row = vec![0.0; n];
            for k in 1..=window as i64 {
                let ahead = clamp(t + k);
                let behind = clamp(t - k);
                for (r, (a, b)) in row.iter_mut().zip(ahead.iter().zip(behind)) {
                    *r += k as f64 * (a - b);
                }
            }
            for r in &mut row {
                *r /= denom;
            }
            row
        })
        .collect()
}

/// Three equal-shape channels: static coefficients, deltas, and deltas of
/// deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccStack {
    coeffs: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    delta_delta: Vec<Vec<f64>>,
}

impl MfccStack {
    pub fn from_mfcc(coeffs: Vec<Vec<f64>>, delta_window: usize) -> MfccStack {
        let d1 = delta(&coeffs, delta_window);
        let d2 = delta(&d1, delta_window);
        MfccStack {
            coeffs,
            delta: d1,
            delta_delta: d2,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.first().map(Vec::len).unwrap_or(0)
    }

    pub fn channels(&self) -> [&Vec<Vec<f64>>; 3] {
        [&self.coeffs, &self.delta, &self.delta_delta]
    }

    /// Row-major flattening of the `T x n_coeffs x 3` tensor: frame, then
    /// coefficient, then channel. Length is always `3 * T * n_coeffs`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.n_frames() * self.n_coeffs());
        for t in 0..self.n_frames() {
            for c in 0..self.n_coeffs() {
                out.push(self.coeffs[t][c]);
                out.push(self.delta[t][c]);
                out.push(self.delta_delta[t][c]);
            }
        }
        out
    }

    /// Per-channel min-max scaling onto [0, 1] for image-style export. A
    /// constant channel maps to all zeros.
    pub fn scaled(&self) -> MfccStack {
        let scale = |channel: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for row in channel {
                for &v in row {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let span = hi - lo;
            channel
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
                        .collect()
                })
                .collect()
        };
        MfccStack {
            coeffs: scale(&self.coeffs),
            delta: scale(&self.delta),
            delta_delta: scale(&self.delta_delta),
        }
    }

    /// Plain-text tensor dump: a `T n_coeffs 3` header line, then one line
    /// per frame holding `n_coeffs * 3` floats in flatten order. Values use
    /// the shortest round-trip rendering, so the format is bit-exact.
    pub fn write_tns(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = format!("{} {} 3\n", self.n_frames(), self.n_coeffs());
        for t in 0..self.n_frames() {
            let mut first = true;
            for c in 0..self.n_coeffs() {
                for channel in self.channels() {
                    if !first {
                        text.push(' ');
                    }
                    text.push_str(&format!("{}", channel[t][c]));
                    first = false;
                }
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_tns(path: impl AsRef<Path>) -> Result<MfccStack> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(path, "empty tensor file"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, 1, format!("bad header \"{header}\"")))?;
        if dims.len() != 3 || dims[2] != 3 {
            return Err(Error::parse(
                path,
                1,
                format!("expected header \"T n_coeffs 3\", got \"{header}\""),
            ));
        }
        let (t_len, n) = (dims[0], dims[1]);
        let mut stack = MfccStack {
            coeffs: vec![vec![0.0; n]; t_len],
            delta: vec![vec![0.0; n]; t_len],
            delta_delta: vec![vec![0.0; n]; t_len],
        };
        for t in 0..t_len {
            let (line_idx, line) = lines
                .next()
                .ok_or_else(|| Error::format(path, format!("expected {t_len} frame lines")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, (line_idx + 1) as u64, "bad float"))?;
            if values.len() != 3 * n {
                return Err(Error::parse(
                    path,
                    (line_idx + 1) as u64,
                    format!("expected {} values, found {}", 3 * n, values.len()),
                ));
            }
            for c in 0..n {
                stack.coeffs[t][c] = values[3 * c];
                stack.delta[t][c] = values[3 * c + 1];
                stack.delta_delta[t][c] = values[3 * c + 2];
            }
        }
        Ok(stack)
    }
}
