//! Shared spectral machinery: uniform resampling of irregular series,
//! Hann-windowed FFT, and in-band peak picking with parabolic refinement.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Linearly interpolate an irregular series onto a uniform grid at `fs`,
/// spanning the full observed time range. Handles dropped frames by filling
/// across the gaps.
pub fn interp_uniform(timestamps_s: &[f64], values: &[f64], fs: f64) -> Vec<f64> {
    assert_eq!(timestamps_s.len(), values.len());
    let t0 = timestamps_s[0];
    let t_end = timestamps_s[timestamps_s.len() - 1];
    let n = ((t_end - t0) * fs).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0usize;
    for i in 0..n {
        let t = t0 + i as f64 / fs;
        while j + 1 < timestamps_s.len() - 1 && timestamps_s[j + 1] < t {
            j += 1;
        }
        let (ta, tb) = (timestamps_s[j], timestamps_s[j + 1]);
        let frac = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out.push(values[j] * (1.0 - frac) + values[j + 1] * frac);
    }
    out
}

/// In-band spectral peak of a uniform series.
///
/// Mean-removes, applies a Hann window, and returns the frequency of the
/// largest in-band magnitude refined by parabolic interpolation over the
/// peak's three bins, together with the fraction of in-band energy in those
/// three bins.
pub fn spectral_peak(samples: &[f64], fs: f64, band_hz: (f64, f64)) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "need at least 8 samples for a spectrum, got {n}"
        )));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos());
            Complex::new((s - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = fs / n as f64;
    let k_lo = (band_hz.0 / df).ceil().max(1.0) as usize;
    let k_hi = ((band_hz.1 / df).floor() as usize).min(n / 2);
    if k_lo > k_hi {
        return Err(Error::Band(format!(
            "no FFT bin inside [{}, {}] Hz at resolution {df} Hz",
            band_hz.0, band_hz.1
        )));
    }

    let mags: Vec<f64> = buf.iter().take(n / 2 + 1).map(|c| c.norm()).collect();
    let mut best_k = k_lo;
    let mut best_mag = -1.0;
    for (k, &m) in mags.iter().enumerate().take(k_hi + 1).skip(k_lo) {
        if m > best_mag {
            best_mag = m;
            best_k = k;
        }
    }
    if best_mag <= 1e-9 * n as f64 {
        return Err(Error::Band("no spectral energy inside the band".into()));
    }

    // Parabolic refinement over the three bins around the peak.
    let delta = if best_k > 0 && best_k + 1 < mags.len() {
        let (a, b, c) = (mags[best_k - 1], mags[best_k], mags[best_k + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-12 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let freq = (best_k as f64 + delta) * df;

    let band_energy: f64 = mags[k_lo..=k_hi].iter().map(|m| m * m).sum();
    let peak_energy: f64 = (best_k.saturating_sub(1)..=(best_k + 1).min(k_hi))
        .filter(|&k| k >= k_lo)
        .map(|k| mags[k] * mags[k])
        .sum();
    let quality = if band_energy > 0.0 {
        (peak_energy / band_energy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((freq, quality))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_tone_peak_refined_below_bin_width() {
        let fs = 30.0;
        let f = 1.37;
        let samples: Vec<f64> = (0..600)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect();
        let (peak, quality) = spectral_peak(&samples, fs, (0.5, 4.0)).unwrap();
        assert!((peak - f).abs() < 0.02, "peak {peak}");
        assert!(quality > 0.5);
    }

    #[test]
    fn constant_signal_has_no_band_energy() {
        let samples = vec![3.0; 600];
        assert!(matches!(
            spectral_peak(&samples, 30.0, (0.5, 4.0)),
            Err(Error::Band(_))
        ));
    }

    #[test]
    fn interp_uniform_bridges_gaps() {
        // 0, 1, 3, 4 at 1 Hz with the t=2 point missing.
        let t = [0.0, 1.0, 3.0, 4.0];
        let v = [0.0, 1.0, 3.0, 4.0];
        let out = interp_uniform(&t, &v, 1.0);
        assert_eq!(out.len(), 5);
        for (i, x) in out.iter().enumerate() {
            assert!((x - i as f64).abs() < 1e-12);
        }
    }
}
