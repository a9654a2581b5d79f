//! PPG waveform synthesis, noise injection, resampling, and CSV I/O.
//!
//! The synthesizer builds each beat from two Gaussian lobes (systolic peak
//! plus dicrotic wave) tiled over beat onsets. Beat onsets come from
//! integrating an instantaneous heart rate, which makes respiratory sinus
//! arrhythmia a frequency modulation of beat timing. Baseline drift,
//! powerline interference, and transient motion bursts are added on top, and
//! the result is min-max normalized to [0, 1].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Systolic lobe: center 30% into the beat, width 12% of the period.
const SYSTOLIC_CENTER: f64 = 0.30;
const SYSTOLIC_WIDTH: f64 = 0.12;
const SYSTOLIC_AMPLITUDE: f64 = 1.0;
/// Dicrotic lobe: center 65% into the beat, width 18% of the period.
const DICROTIC_CENTER: f64 = 0.65;
const DICROTIC_WIDTH: f64 = 0.18;
const DICROTIC_AMPLITUDE: f64 = 0.35;

/// Motion bursts are raised-cosine bumps of this duration.
const MOTION_BURST_DURATION_S: f64 = 0.5;

/// A uniformly sampled PPG signal in arbitrary units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpgWaveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    /// Provenance note (synthesis parameters, source file, ...).
    pub label: String,
}

impl PpgWaveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("waveform has no samples".into()));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Input(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Input("waveform contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            label: label.into(),
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Parameters for [`synthesize_ppg`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub heart_rate_bpm: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Respiratory frequency in Hz; modulates instantaneous HR when
    /// `rsa_depth > 0`.
    pub rsa_freq_hz: f64,
    /// Fractional HR modulation depth; 0 disables RSA.
    pub rsa_depth: f64,
    pub drift_freq_hz: f64,
    pub drift_amplitude: f64,
    pub powerline_freq_hz: f64,
    pub powerline_amplitude: f64,
    pub motion_burst_rate_per_min: f64,
    pub motion_burst_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 60.0,
            duration_s: 60.0,
            sample_rate_hz: 100.0,
            rsa_freq_hz: 0.25,
            rsa_depth: 0.0,
            drift_freq_hz: 0.05,
            drift_amplitude: 0.0,
            powerline_freq_hz: 50.0,
            powerline_amplitude: 0.0,
            motion_burst_rate_per_min: 0.0,
            motion_burst_amplitude: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(30.0..=240.0).contains(&self.heart_rate_bpm) {
            return Err(Error::Config(format!(
                "heart rate must be in [30, 240] bpm, got {}",
                self.heart_rate_bpm
            )));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        // Nyquist margin for the beat fundamental.
        if self.sample_rate_hz < 4.0 * self.heart_rate_bpm / 60.0 {
            return Err(Error::Config(format!(
                "sample rate {} Hz is below 4x the beat frequency ({} bpm)",
                self.sample_rate_hz, self.heart_rate_bpm
            )));
        }
        for (name, v) in [
            ("rsa_freq_hz", self.rsa_freq_hz),
            ("rsa_depth", self.rsa_depth),
            ("drift_freq_hz", self.drift_freq_hz),
            ("drift_amplitude", self.drift_amplitude),
            ("powerline_freq_hz", self.powerline_freq_hz),
            ("powerline_amplitude", self.powerline_amplitude),
            ("motion_burst_rate_per_min", self.motion_burst_rate_per_min),
            ("motion_burst_amplitude", self.motion_burst_amplitude),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Beat onset times from integrating the instantaneous beat rate
/// `hr(t) = hr0 * (1 + depth * sin(2*pi*f_rsa*t))`.
///
/// Returns onsets covering [0, duration] plus one extrapolated onset on each
/// side so that partial beats at the edges render with their tails.
fn beat_onsets(cfg: &SynthConfig) -> Vec<f64> {
    let f0 = cfg.heart_rate_bpm / 60.0;
    let fs = cfg.sample_rate_hz;
    let n = (cfg.duration_s * fs).round() as usize;
    let dt = 1.0 / fs;

    let mut onsets = Vec::new();
    let mut phase = 0.0;
    onsets.push(0.0); // phase crosses 0 at t = 0
    let mut prev_phase = 0.0f64;
    for i in 0..n + 1 {
        let t = i as f64 * dt;
        let rate = if cfg.rsa_depth > 0.0 {
            f0 * (1.0 + cfg.rsa_depth * (2.0 * PI * cfg.rsa_freq_hz * t).sin())
        } else {
            f0
        };
        phase += rate * dt;
        let k = phase.floor();
        if k > prev_phase.floor() {
            // linear interpolation of the crossing time inside this step
            let frac = (k - prev_phase) / (phase - prev_phase);
            onsets.push(t + (frac - 1.0) * dt);
        }
        prev_phase = phase;
    }
    // Extrapolate one beat before and after so edge beats are complete.
    if onsets.len() >= 2 {
        let first_ibi = onsets[1] - onsets[0];
        let last_ibi = onsets[onsets.len() - 1] - onsets[onsets.len() - 2];
        onsets.insert(0, onsets[0] - first_ibi);
        onsets.push(onsets[onsets.len() - 1] + last_ibi);
    }
    onsets
}

/// Add a Gaussian lobe to `signal`.
fn add_lobe(signal: &mut [f64], fs: f64, center_s: f64, sigma_s: f64, amplitude: f64) {
    let lo = (((center_s - 5.0 * sigma_s) * fs).floor().max(0.0)) as usize;
    let hi = (((center_s + 5.0 * sigma_s) * fs).ceil() as usize).min(signal.len());
    for (i, v) in signal.iter_mut().enumerate().take(hi).skip(lo) {
        let t = i as f64 / fs;
        let z = (t - center_s) / sigma_s;
        *v += amplitude * (-0.5 * z * z).exp();
    }
}

/// Generate a synthetic PPG waveform.
///
/// Deterministic for a fixed config; the seed drives all randomness (motion
/// burst placement). The output is normalized to [0, 1].
pub fn synthesize_ppg(cfg: &SynthConfig) -> Result<PpgWaveform> {
    cfg.validate()?;
    let fs = cfg.sample_rate_hz;
    let n = (cfg.duration_s * fs).round() as usize;
    let mut signal = vec![0.0f64; n];

    let onsets = beat_onsets(cfg);
    for pair in onsets.windows(2) {
        let (onset, next) = (pair[0], pair[1]);
        let period = next - onset;
        add_lobe(
            &mut signal,
            fs,
            onset + SYSTOLIC_CENTER * period,
            SYSTOLIC_WIDTH * period,
            SYSTOLIC_AMPLITUDE,
        );
        add_lobe(
            &mut signal,
            fs,
            onset + DICROTIC_CENTER * period,
            DICROTIC_WIDTH * period,
            DICROTIC_AMPLITUDE,
        );
    }

    if cfg.drift_amplitude > 0.0 {
        for (i, v) in signal.iter_mut().enumerate() {
            let t = i as f64 / fs;
            *v += cfg.drift_amplitude * (2.0 * PI * cfg.drift_freq_hz * t).sin();
        }
    }
    if cfg.powerline_amplitude > 0.0 {
        for (i, v) in signal.iter_mut().enumerate() {
            let t = i as f64 / fs;
            *v += cfg.powerline_amplitude * (2.0 * PI * cfg.powerline_freq_hz * t).sin();
        }
    }
    if cfg.motion_burst_rate_per_min > 0.0 && cfg.motion_burst_amplitude > 0.0 {
        let mut rng = SimRng::new(cfg.seed);
        let expected = cfg.motion_burst_rate_per_min * cfg.duration_s / 60.0;
        let count = poisson_draw(&mut rng, expected);
        for _ in 0..count {
            let start = rng.uniform() * cfg.duration_s;
            let lo = ((start * fs).floor().max(0.0)) as usize;
            let hi = (((start + MOTION_BURST_DURATION_S) * fs).ceil() as usize).min(n);
            for (i, v) in signal.iter_mut().enumerate().take(hi).skip(lo) {
                let t = i as f64 / fs;
                let u = (t - start) / MOTION_BURST_DURATION_S;
                if (0.0..1.0).contains(&u) {
                    *v += cfg.motion_burst_amplitude * 0.5 * (1.0 - (2.0 * PI * u).cos());
                }
            }
        }
    }

    // Normalize to [0, 1].
    let min = signal.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = signal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        let span = max - min;
        for v in &mut signal {
            *v = (*v - min) / span;
        }
    }

    PpgWaveform::new(
        signal,
        fs,
        format!("synth hr={}bpm dur={}s seed={}", cfg.heart_rate_bpm, cfg.duration_s, cfg.seed),
    )
}

/// Knuth's product method; expected counts here are small.
fn poisson_draw(rng: &mut SimRng, lambda: f64) -> u64 {
    let limit = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0;
    loop {
        p *= rng.uniform();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// Add zero-mean white Gaussian noise at the requested SNR in dB.
///
/// Signal power is the mean-removed power of the input. Deterministic given
/// the seed.
pub fn add_noise(waveform: &PpgWaveform, snr_db: f64, seed: u64) -> Result<PpgWaveform> {
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("snr_db must be finite, got {snr_db}")));
    }
    let n = waveform.samples.len() as f64;
    let mean = waveform.samples.iter().sum::<f64>() / n;
    let power = waveform.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    if power <= 0.0 {
        return Err(Error::DegenerateSignal(
            "cannot set an SNR on a constant waveform".into(),
        ));
    }
    let noise_std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = SimRng::new(seed);
    let samples = waveform
        .samples
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s + noise_std * z
        })
        .collect();
    PpgWaveform::new(
        samples,
        waveform.sample_rate_hz,
        format!("{} +noise {snr_db}dB", waveform.label),
    )
}

/// Windowed-sinc low-pass FIR taps (Blackman window, odd length, unit DC gain).
fn lowpass_taps(cutoff_cycles_per_sample: f64, half_len: usize) -> Vec<f64> {
    let m = 2 * half_len;
    let mut taps = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let x = i as f64 - half_len as f64;
        let sinc = if x.abs() < 1e-12 {
            2.0 * cutoff_cycles_per_sample
        } else {
            (2.0 * PI * cutoff_cycles_per_sample * x).sin() / (PI * x)
        };
        let w = 0.42 - 0.5 * (PI * i as f64 / half_len as f64).cos()
            + 0.08 * (2.0 * PI * i as f64 / half_len as f64).cos();
        taps.push(sinc * w);
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Zero-phase FIR filtering with reflected edges.
pub(crate) fn filter_zero_phase(samples: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = taps.len() / 2;
    let n = samples.len() as isize;
    let reflect = |idx: isize| -> f64 {
        let mut i = idx;
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * (n - 1) - i;
        }
        samples[i.clamp(0, n - 1) as usize]
    };
    (0..samples.len())
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(k, &t)| t * reflect(i as isize + k as isize - half as isize))
                .sum()
        })
        .collect()
}

/// Zero-phase low-pass at `cutoff` cycles per sample.
pub(crate) fn filter_lowpass(samples: &[f64], cutoff_cycles_per_sample: f64) -> Vec<f64> {
    filter_zero_phase(samples, &lowpass_taps(cutoff_cycles_per_sample, 24))
}

/// Resample to `target_rate_hz` via an anti-aliasing low-pass at
/// `0.45 * min(source, target)` followed by linear interpolation.
pub fn resample(waveform: &PpgWaveform, target_rate_hz: f64) -> Result<PpgWaveform> {
    if !(target_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "target rate must be positive, got {target_rate_hz}"
        )));
    }
    let src = waveform.sample_rate_hz;
    if (target_rate_hz - src).abs() < 1e-12 * src {
        return Ok(waveform.clone());
    }

    let cutoff_hz = 0.45 * src.min(target_rate_hz);
    let taps = lowpass_taps(cutoff_hz / src, 48);
    let filtered = filter_zero_phase(&waveform.samples, &taps);

    let n_out = (waveform.duration_s() * target_rate_hz).round().max(1.0) as usize;
    let last = filtered.len() - 1;
    let samples = (0..n_out)
        .map(|i| {
            let x = i as f64 / target_rate_hz * src;
            let i0 = (x.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = x - i0 as f64;
            filtered[i0] * (1.0 - frac) + filtered[i1] * frac
        })
        .collect();
    PpgWaveform::new(
        samples,
        target_rate_hz,
        format!("{} @{}Hz", waveform.label, target_rate_hz),
    )
}

/// Read a waveform from CSV (`t_s,value` header, uniform time steps).
pub fn load_waveform(path: impl AsRef<Path>) -> Result<PpgWaveform> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_waveform_csv(&text, &path.as_ref().display().to_string())
}

pub(crate) fn parse_waveform_csv(text: &str, label: &str) -> Result<PpgWaveform> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "t_s,value" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header 't_s,value', got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (t, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(v), None) => (t, v),
            _ => return Err(Error::Parse(format!("line {}: expected 2 fields", lineno + 2))),
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: bad time: {e}", lineno + 2)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: bad value: {e}", lineno + 2)))?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::Parse(format!(
                    "line {}: time not strictly increasing ({t} after {prev})",
                    lineno + 2
                )));
            }
        }
        times.push(t);
        values.push(v);
    }
    if times.len() < 2 {
        return Err(Error::Parse("need at least 2 samples".into()));
    }
    let dt0 = times[1] - times[0];
    for pair in times.windows(2) {
        let dt = pair[1] - pair[0];
        if (dt - dt0).abs() > 0.01 * dt0 {
            return Err(Error::Parse(format!(
                "inconsistent sampling interval: {dt} vs {dt0}"
            )));
        }
    }
    let fs = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
    PpgWaveform::new(values, fs, label)
}

/// Write a waveform as `t_s,value` CSV.
pub fn write_waveform(waveform: &PpgWaveform, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("t_s,value\n");
    for (i, v) in waveform.samples.iter().enumerate() {
        let t = i as f64 / waveform.sample_rate_hz;
        writeln!(out, "{t:.9},{v:.12}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}
