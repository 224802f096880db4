//! Shared helpers for the integration suites: deterministic random data and
//! an independent MFCC reference implementation.
//!
//! The reference pipeline below is written from the declared parameters only
//! (25 ms periodic-Hann windows, 10 ms hop, one-sided magnitude-squared DFT,
//! 64 triangular HTK-mel filters over 125-7500 Hz with linear ramps in Hz,
//! natural log with a 1e-10 floor, orthonormal DCT-II, 13 coefficients). It
//! shares no code with the library: the spectrum comes from a direct O(N^2)
//! DFT rather than an FFT, and the filterbank and DCT are evaluated from
//! their defining formulas inline.

use memrank::harness::SplitMix64;

/// Uniform samples in [-0.5, 0.5), safe as audio amplitudes.
pub fn noise_samples(rng: &mut SplitMix64, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.next_f64() - 0.5).collect()
}

pub fn sine_samples(freq: f64, amplitude: f64, len: usize, rate: f64) -> Vec<f64> {
    (0..len)
        .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin())
        .collect()
}

const REF_SAMPLE_RATE: f64 = 16_000.0;
const REF_WIN: usize = 400;
const REF_HOP: usize = 160;
const REF_FILTERS: usize = 64;
const REF_FMIN: f64 = 125.0;
const REF_FMAX: f64 = 7500.0;
const REF_COEFFS: usize = 13;
const REF_FLOOR: f64 = 1e-10;

fn ref_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn ref_inv_mel(mel: f64) -> f64 {
    700.0 * (10.0_f64.powf(mel / 2595.0) - 1.0)
}

/// Reference MFCC matrix for 16 kHz audio, computed with a direct DFT.
pub fn reference_mfcc(samples: &[f64]) -> Vec<Vec<f64>> {
    assert!(samples.len() >= REF_WIN);
    let n_frames = (samples.len() - REF_WIN) / REF_HOP + 1;
    let n_bins = REF_WIN / 2 + 1;
    let pi = std::f64::consts::PI;

    // filterbank edge frequencies, uniform in mel
    let lo = ref_mel(REF_FMIN);
    let hi = ref_mel(REF_FMAX);
    let edges: Vec<f64> = (0..REF_FILTERS + 2)
        .map(|i| ref_inv_mel(lo + (hi - lo) * i as f64 / (REF_FILTERS + 1) as f64))
        .collect();

    let mut out = Vec::with_capacity(n_frames);
    for frame in 0..n_frames {
        let start = frame * REF_HOP;
        // periodic Hann window
        let windowed: Vec<f64> = (0..REF_WIN)
            .map(|i| {
                samples[start + i] * (0.5 - 0.5 * (2.0 * pi * i as f64 / REF_WIN as f64).cos())
            })
            .collect();

        // one-sided power spectrum by direct DFT
        let mut power = vec![0.0; n_bins];
        for (k, p) in power.iter_mut().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, x) in windowed.iter().enumerate() {
                let angle = 2.0 * pi * k as f64 * n as f64 / REF_WIN as f64;
                re += x * angle.cos();
                im -= x * angle.sin();
            }
            *p = re * re + im * im;
        }

        // triangular filters with linear ramps in Hz
        let mut logged = vec![0.0; REF_FILTERS];
        for (f, value) in logged.iter_mut().enumerate() {
            let (left, center, right) = (edges[f], edges[f + 1], edges[f + 2]);
            let mut energy = 0.0;
            for (k, p) in power.iter().enumerate() {
                let freq = k as f64 * REF_SAMPLE_RATE / REF_WIN as f64;
                if freq > left && freq < right {
                    let w = if freq <= center {
                        (freq - left) / (center - left)
                    } else {
                        (right - freq) / (right - center)
                    };
                    energy += w * p;
                }
            }
            *value = energy.max(REF_FLOOR).ln();
        }

        // orthonormal DCT-II, first 13 rows
        let m = REF_FILTERS as f64;
        let coeffs: Vec<f64> = (0..REF_COEFFS)
            .map(|k| {
                let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                scale
                    * logged
                        .iter()
                        .enumerate()
                        .map(|(j, x)| x * (pi * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * m)).cos())
                        .sum::<f64>()
            })
            .collect();
        out.push(coeffs);
    }
    out
}
