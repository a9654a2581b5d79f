//! Reference heart-rate estimators for the recovered signal: a spectral
//! estimator (Hann + FFT + parabolic peak) and an inter-beat-interval
//! estimator (detrend, low-pass, peak picking).

use serde::{Deserialize, Serialize};

use crate::dut::RecoveredSignal;
use crate::error::{Error, Result};
use crate::spectral::{interp_uniform, spectral_peak};
use crate::waveform;

/// Color channel carrying the PPG signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrMethod {
    Spectral,
    Peak,
}

/// A heart-rate estimate with a [0, 1] quality score: fraction of spectral
/// energy at the chosen peak, or fraction of inter-beat intervals within 10%
/// of their median.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HrEstimate {
    pub bpm: f64,
    pub method: HrMethod,
    pub quality: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: HrMethod,
    /// Search band in bpm.
    pub band_bpm: (f64, f64),
    pub channel: Channel,
    /// Uniform grid rate for interpolation; `None` uses the nominal fps.
    pub resample_fps: Option<f64>,
    /// When false, samples are treated as uniformly spaced at the nominal
    /// fps and timestamps are ignored — the naive path that frame drops
    /// corrupt.
    pub timestamp_aware: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: HrMethod::Spectral,
            band_bpm: (30.0, 240.0),
            channel: Channel::G,
            resample_fps: None,
            timestamp_aware: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band_bpm;
        if !(30.0 <= lo && lo < hi && hi <= 300.0) {
            return Err(Error::Config(format!(
                "band must satisfy 30 <= low < high <= 300, got ({lo}, {hi})"
            )));
        }
        if let Some(fps) = self.resample_fps {
            if !(fps > 0.0) {
                return Err(Error::Config(format!("resample_fps must be positive, got {fps}")));
            }
        }
        Ok(())
    }
}

/// Interpolate the configured channel onto a uniform grid.
fn uniform_series(signal: &RecoveredSignal, cfg: &EstimatorConfig) -> Result<(Vec<f64>, f64)> {
    signal.validate()?;
    cfg.validate()?;
    let fs = cfg.resample_fps.unwrap_or(signal.nominal_fps);
    let min_duration = 4.0 * 60.0 / cfg.band_bpm.0;
    let values = signal.channel(cfg.channel.index());
    if cfg.timestamp_aware {
        if signal.duration_s() < min_duration {
            return Err(Error::InsufficientData(format!(
                "need {:.1} s of signal for a {} bpm band edge, got {:.1} s",
                min_duration,
                cfg.band_bpm.0,
                signal.duration_s()
            )));
        }
        Ok((interp_uniform(&signal.timestamps_s, &values, fs), fs))
    } else {
        // Naive path: pretend the samples were uniform at the nominal rate.
        let fs = signal.nominal_fps;
        if values.len() as f64 / fs < min_duration {
            return Err(Error::InsufficientData(format!(
                "need {:.1} s of signal, got {:.1} s",
                min_duration,
                values.len() as f64 / fs
            )));
        }
        Ok((values, fs))
    }
}

/// Spectral HR estimate: largest in-band FFT magnitude with parabolic
/// sub-bin refinement.
pub fn estimate_hr_spectral(signal: &RecoveredSignal, cfg: &EstimatorConfig) -> Result<HrEstimate> {
    let (series, fs) = uniform_series(signal, cfg)?;
    let band_hz = (cfg.band_bpm.0 / 60.0, cfg.band_bpm.1 / 60.0);
    let (freq, quality) = spectral_peak(&series, fs, band_hz)?;
    Ok(HrEstimate {
        bpm: (60.0 * freq).clamp(cfg.band_bpm.0, cfg.band_bpm.1),
        method: HrMethod::Spectral,
        quality,
    })
}

fn quartiles(sorted: &[f64]) -> (f64, f64) {
    let q = |p: f64| -> f64 {
        let x = p * (sorted.len() - 1) as f64;
        let i = x.floor() as usize;
        let frac = x - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    (q(0.25), q(0.75))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Prominence of a local maximum: height above the higher of the two valley
/// minima reached before a taller sample on each side.
fn prominence(series: &[f64], peak: usize) -> f64 {
    let h = series[peak];
    let mut left_min = h;
    for i in (0..peak).rev() {
        if series[i] > h {
            break;
        }
        left_min = left_min.min(series[i]);
    }
    let mut right_min = h;
    for &v in series.iter().skip(peak + 1) {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Inter-beat-interval HR estimate: detrend, low-pass at the band's high
/// edge, invert to put systolic peaks upward, pick prominent maxima, and take
/// 60 over the median interval.
pub fn estimate_hr_peaks(signal: &RecoveredSignal, cfg: &EstimatorConfig) -> Result<HrEstimate> {
    let (series, fs) = uniform_series(signal, cfg)?;

    // Moving-average detrend over one longest-expected beat period.
    let window = ((fs * 60.0 / cfg.band_bpm.0).round() as usize).max(3) | 1;
    let half = window / 2;
    let n = series.len();
    let mut detrended = Vec::with_capacity(n);
    // Prefix sums keep the baseline pass linear.
    let mut prefix = vec![0.0f64; n + 1];
    for (i, &v) in series.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let baseline = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        detrended.push(series[i] - baseline);
    }

    let cutoff = (cfg.band_bpm.1 / 60.0) / fs;
    let smoothed = if cutoff < 0.5 {
        waveform::filter_lowpass(&detrended, cutoff)
    } else {
        detrended
    };

    // PPG troughs in pixel space are systolic peaks.
    let inverted: Vec<f64> = smoothed.iter().map(|v| -v).collect();

    let mut sorted = inverted.clone();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = quartiles(&sorted);
    let min_prominence = 0.3 * (q3 - q1);
    let min_sep = (fs * 60.0 / cfg.band_bpm.1).round() as usize;

    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if inverted[i] >= inverted[i - 1]
            && inverted[i] > inverted[i + 1]
            && prominence(&inverted, i) >= min_prominence
        {
            if let Some(&last) = peaks.last() {
                if i - last < min_sep {
                    if inverted[i] > inverted[last] {
                        *peaks.last_mut().unwrap() = i;
                    }
                    continue;
                }
            }
            peaks.push(i);
        }
    }
    if peaks.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} beats detected, need at least 3",
            peaks.len()
        )));
    }
    let mut ibis: Vec<f64> = peaks.windows(2).map(|p| (p[1] - p[0]) as f64 / fs).collect();
    ibis.sort_by(f64::total_cmp);
    let med = median(&ibis);
    let quality =
        ibis.iter().filter(|&&x| (x - med).abs() <= 0.1 * med).count() as f64 / ibis.len() as f64;
    Ok(HrEstimate {
        bpm: (60.0 / med).clamp(cfg.band_bpm.0, cfg.band_bpm.1),
        method: HrMethod::Peak,
        quality,
    })
}

/// Dispatch on the configured method.
pub fn estimate_hr(signal: &RecoveredSignal, cfg: &EstimatorConfig) -> Result<HrEstimate> {
    match cfg.method {
        HrMethod::Spectral => estimate_hr_spectral(signal, cfg),
        HrMethod::Peak => estimate_hr_peaks(signal, cfg),
    }
}
