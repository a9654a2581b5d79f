//! Independent reference routines used by the test suites as oracles.
//!
//! Deliberately naive implementations (plain DFT argmax, threshold peak
//! picking) kept separate from the production signal path so tests can check
//! one against the other.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Frequency of the largest DFT magnitude in (0, fs/2), no refinement.
pub fn fft_peak_hz(samples: &[f64], sample_rate_hz: f64) -> f64 {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = (0usize, 0.0f64);
    for (k, c) in buf.iter().enumerate().take(n / 2).skip(1) {
        let mag = c.norm();
        if mag > best.1 {
            best = (k, mag);
        }
    }
    best.0 as f64 * sample_rate_hz / n as f64
}

/// Indices of local maxima above `min_height` separated by at least
/// `min_separation` samples (greedy, left to right).
pub fn detect_peaks_simple(samples: &[f64], min_height: f64, min_separation: usize) -> Vec<usize> {
    let mut peaks = Vec::new();
    for i in 1..samples.len().saturating_sub(1) {
        if samples[i] > min_height && samples[i] >= samples[i - 1] && samples[i] > samples[i + 1] {
            if let Some(&last) = peaks.last() {
                if i - last < min_separation {
                    if samples[i] > samples[last] {
                        *peaks.last_mut().unwrap() = i;
                    }
                    continue;
                }
            }
            peaks.push(i);
        }
    }
    peaks
}

/// Textbook product-moment correlation.
pub fn pearson_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
