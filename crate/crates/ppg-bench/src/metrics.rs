//! Accuracy and diagnostic metrics: MAPE, Pearson correlation, lag-aligned
//! cross-correlation, coefficient of variation, the consumer-monitor
//! accuracy classification, frame-rate statistics, and accelerometer
//! dominant-frequency analysis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dut::RecoveredSignal;
use crate::error::{Error, Result};
use crate::estimator::Channel;
use crate::rng::SimRng;
use crate::spectral::{interp_uniform, spectral_peak};
use crate::waveform::PpgWaveform;

/// Bootstrap resample count for the accuracy classification.
const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Expected/measured HR pairs from one or more bench runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedMeasurements {
    pub expected_bpm: Vec<f64>,
    pub measured_bpm: Vec<f64>,
}

impl PairedMeasurements {
    pub fn validate(&self) -> Result<()> {
        if self.expected_bpm.is_empty() || self.expected_bpm.len() != self.measured_bpm.len() {
            return Err(Error::Input(format!(
                "need equal nonzero lengths, got {} expected and {} measured",
                self.expected_bpm.len(),
                self.measured_bpm.len()
            )));
        }
        if self
            .expected_bpm
            .iter()
            .chain(&self.measured_bpm)
            .any(|&v| !(v > 0.0))
        {
            return Err(Error::Input("all HR values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapeResult {
    pub mape_pct: f64,
    pub ape_pct: Vec<f64>,
}

/// Mean absolute percentage error over paired measurements.
pub fn mape(pairs: &PairedMeasurements) -> Result<MapeResult> {
    pairs.validate()?;
    let ape_pct: Vec<f64> = pairs
        .expected_bpm
        .iter()
        .zip(&pairs.measured_bpm)
        .map(|(e, m)| 100.0 * (m - e).abs() / e)
        .collect();
    let mape_pct = ape_pct.iter().sum::<f64>() / ape_pct.len() as f64;
    Ok(MapeResult { mape_pct, ape_pct })
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input(format!(
            "need equal lengths >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
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
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateSignal("constant input to pearson".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XcorrResult {
    /// Maximum normalized correlation over the lag window.
    pub r: f64,
    /// Lag of the recovered signal relative to the reference, in seconds.
    pub lag_s: f64,
}

/// Lag-aligned cross-correlation between a reference waveform and a
/// recovered signal.
///
/// The recovered channel is resampled to the reference rate; the reference
/// is passed through the encoder's invert-and-rescale orientation first, so
/// a perfect pipeline scores +1.
pub fn xcorr_aligned(
    reference: &PpgWaveform,
    recovered: &RecoveredSignal,
    max_lag_s: f64,
    channel: Channel,
) -> Result<XcorrResult> {
    recovered.validate()?;
    if !(max_lag_s >= 0.0) {
        return Err(Error::Input(format!("max_lag_s must be >= 0, got {max_lag_s}")));
    }
    let overlap = reference.duration_s().min(recovered.duration_s());
    if overlap < 2.0 * max_lag_s {
        return Err(Error::Input(format!(
            "overlapping duration {overlap:.2} s is shorter than 2 * max_lag ({max_lag_s} s)"
        )));
    }
    let fs = reference.sample_rate_hz;

    // Encoder orientation: min-max normalize, then 0.5 - p.
    let min = reference.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = reference.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateSignal("constant reference waveform".into()));
    }
    let x: Vec<f64> = reference
        .samples
        .iter()
        .map(|&s| 0.5 - (s - min) / (max - min))
        .collect();

    let values = recovered.channel(channel.index());
    let y = interp_uniform(&recovered.timestamps_s, &values, fs);
    let t0_y = recovered.timestamps_s[0];

    // Comparing x[i] with y[i + m] implies the recovered signal lags the
    // reference by t0_y + m / fs.
    let m_lo = ((-max_lag_s - t0_y) * fs).ceil() as isize;
    let m_hi = ((max_lag_s - t0_y) * fs).floor() as isize;
    // Visit lags by increasing |lag| so that exact ties (periodic signals)
    // resolve to the smallest displacement.
    let mut order: Vec<isize> = (m_lo..=m_hi).collect();
    order.sort_by(|a, b| {
        let la = (t0_y + *a as f64 / fs).abs();
        let lb = (t0_y + *b as f64 / fs).abs();
        la.total_cmp(&lb)
    });
    let mut best: Option<XcorrResult> = None;
    for m in order {
        let i_start = (-m).max(0) as usize;
        let i_end = (x.len() as isize).min(y.len() as isize - m).max(0) as usize;
        if i_end.saturating_sub(i_start) < 8 {
            continue;
        }
        let xs = &x[i_start..i_end];
        let ys: Vec<f64> = (i_start..i_end).map(|i| y[(i as isize + m) as usize]).collect();
        if let Ok(r) = pearson(xs, &ys) {
            let lag_s = t0_y + m as f64 / fs;
            if best.map_or(true, |b| r > b.r + 1e-12) {
                best = Some(XcorrResult { r, lag_s });
            }
        }
    }
    best.ok_or_else(|| Error::Input("no lag with sufficient overlap".into()))
}

/// Coefficient of variation in percent, sample (n-1) standard deviation.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean.abs() < 1e-300 {
        return Err(Error::DegenerateSignal("zero mean in CoV".into()));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(100.0 * var.sqrt() / mean)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyClassification {
    pub pass: bool,
    pub mape_pct: f64,
    /// One-sided 95% bootstrap upper confidence bound of the mean APE.
    pub ci95_upper_pct: f64,
}

/// Consumer-monitor accuracy criterion: pass iff the one-sided 95% bootstrap
/// upper bound of the mean APE is below 10%.
pub fn classify_accuracy(ape_pct: &[f64], seed: u64) -> Result<AccuracyClassification> {
    if ape_pct.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "need at least 10 measurements, got {}",
            ape_pct.len()
        )));
    }
    let n = ape_pct.len();
    let mape_pct = ape_pct.iter().sum::<f64>() / n as f64;
    let mut rng = SimRng::new(seed);
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += ape_pct[(rng.next() % n as u64) as usize];
        }
        means.push(sum / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let idx = ((0.95 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize).min(means.len() - 1);
    let ci95_upper_pct = means[idx];
    Ok(AccuracyClassification {
        pass: ci95_upper_pct < 10.0,
        mape_pct,
        ci95_upper_pct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRateStats {
    pub mean_fps: f64,
    pub instantaneous_fps: Vec<f64>,
    /// Missing frames implied by gaps longer than 1.5 nominal intervals.
    pub drop_count: u64,
}

/// Frame timing statistics over a timestamp sequence.
pub fn frame_rate_stats(timestamps_s: &[f64], nominal_fps: f64) -> Result<FrameRateStats> {
    if timestamps_s.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 timestamps, got {}",
            timestamps_s.len()
        )));
    }
    if timestamps_s.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Input("timestamps not strictly increasing".into()));
    }
    let n = timestamps_s.len();
    let mean_fps = (n - 1) as f64 / (timestamps_s[n - 1] - timestamps_s[0]);
    let nominal_interval = 1.0 / nominal_fps;
    let mut instantaneous_fps = Vec::with_capacity(n - 1);
    let mut drop_count = 0u64;
    for pair in timestamps_s.windows(2) {
        let gap = pair[1] - pair[0];
        instantaneous_fps.push(1.0 / gap);
        if gap > 1.5 * nominal_interval {
            drop_count += ((gap * nominal_fps).round() as u64).saturating_sub(1);
        }
    }
    Ok(FrameRateStats {
        mean_fps,
        instantaneous_fps,
        drop_count,
    })
}

/// Accelerometer magnitude trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelTrace {
    pub timestamps_s: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl AccelTrace {
    pub fn validate(&self) -> Result<()> {
        if self.timestamps_s.len() != self.magnitude.len() || self.timestamps_s.len() < 2 {
            return Err(Error::Input(
                "accelerometer trace needs >= 2 equal-length columns".into(),
            ));
        }
        if self.timestamps_s.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Input("timestamps not strictly increasing".into()));
        }
        if self.magnitude.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Input("magnitudes must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Read from CSV with header `t_s,magnitude`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "t_s,magnitude" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header 't_s,magnitude', got {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut timestamps_s = Vec::new();
        let mut magnitude = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(m), None) => {
                    timestamps_s.push(
                        t.trim()
                            .parse()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?,
                    );
                    magnitude.push(
                        m.trim()
                            .parse()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?,
                    );
                }
                _ => return Err(Error::Parse(format!("line {}: expected 2 fields", lineno + 2))),
            }
        }
        let trace = Self {
            timestamps_s,
            magnitude,
        };
        trace.validate()?;
        Ok(trace)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantFrequency {
    pub freq_hz: f64,
}

impl DominantFrequency {
    /// Whether the dominant frequency explains an HR reading, within `tol_hz`.
    pub fn matches_bpm(&self, bpm: f64, tol_hz: f64) -> bool {
        (self.freq_hz - bpm / 60.0).abs() <= tol_hz
    }
}

/// Dominant in-band frequency of an accelerometer trace.
pub fn dominant_frequency(trace: &AccelTrace, band_hz: (f64, f64)) -> Result<DominantFrequency> {
    trace.validate()?;
    let duration = trace.timestamps_s[trace.timestamps_s.len() - 1] - trace.timestamps_s[0];
    if duration < 4.0 / band_hz.0 {
        return Err(Error::InsufficientData(format!(
            "need {:.1} s of trace for a {} Hz band edge, got {duration:.1} s",
            4.0 / band_hz.0,
            band_hz.0
        )));
    }
    let fs = (trace.timestamps_s.len() - 1) as f64 / duration;
    let series = interp_uniform(&trace.timestamps_s, &trace.magnitude, fs);
    let (freq_hz, _) = spectral_peak(&series, fs, band_hz)?;
    Ok(DominantFrequency { freq_hz })
}
