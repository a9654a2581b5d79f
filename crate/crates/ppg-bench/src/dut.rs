//! Virtual device under test: decode clips to spatial-mean time series and
//! apply hardware-like degradations (frame drops, timestamp jitter, sensor
//! noise).

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::VideoClip;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Minimum gap inserted when jitter makes timestamps collide.
const MIN_TIMESTAMP_GAP_S: f64 = 0.0001;

/// Per-channel spatial means as seen by a device under test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredSignal {
    pub timestamps_s: Vec<f64>,
    /// R, G, B spatial means per timestamp.
    pub means: Vec<[f64; 3]>,
    pub nominal_fps: f64,
}

impl RecoveredSignal {
    pub fn validate(&self) -> Result<()> {
        if self.timestamps_s.len() != self.means.len() {
            return Err(Error::Input(format!(
                "{} timestamps but {} mean triples",
                self.timestamps_s.len(),
                self.means.len()
            )));
        }
        if self.timestamps_s.is_empty() {
            return Err(Error::Input("recovered signal is empty".into()));
        }
        if self.timestamps_s.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Input("timestamps not strictly increasing".into()));
        }
        if self
            .means
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Input("non-finite channel mean".into()));
        }
        Ok(())
    }

    /// One channel as a plain series (0 = R, 1 = G, 2 = B).
    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.means.iter().map(|m| m[channel]).collect()
    }

    pub fn duration_s(&self) -> f64 {
        self.timestamps_s[self.timestamps_s.len() - 1] - self.timestamps_s[0]
    }
}

/// Frame-drop behavior of the emulated camera pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DropMode {
    None,
    /// Each frame independently dropped with probability `p`.
    Uniform { p: f64 },
    /// Drop probability grows with heart rate:
    /// `p = min(0.95, base_p + slope_per_bpm * max(0, hr - 120))`.
    HrDependent { base_p: f64, slope_per_bpm: f64 },
}

impl DropMode {
    /// Resolve the per-frame drop probability for a case at `hr_bpm`.
    pub fn drop_probability(&self, hr_bpm: f64) -> f64 {
        match *self {
            DropMode::None => 0.0,
            DropMode::Uniform { p } => p,
            DropMode::HrDependent { base_p, slope_per_bpm } => {
                (base_p + slope_per_bpm * (hr_bpm - 120.0).max(0.0)).min(0.95)
            }
        }
    }
}

/// Degradations applied between the ideal decoded signal and what the DUT's
/// algorithm sees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationConfig {
    pub drop_mode: DropMode,
    pub jitter_std_ms: f64,
    /// Additive Gaussian noise on each channel mean, in pixel units.
    pub sensor_noise_std: f64,
    pub seed: u64,
}

impl DegradationConfig {
    pub fn none() -> Self {
        Self {
            drop_mode: DropMode::None,
            jitter_std_ms: 0.0,
            sensor_noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_p = |p: f64| -> Result<()> {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "drop probability must be in [0, 1), got {p}"
                )));
            }
            Ok(())
        };
        match self.drop_mode {
            DropMode::None => {}
            DropMode::Uniform { p } => check_p(p)?,
            DropMode::HrDependent { base_p, slope_per_bpm } => {
                check_p(base_p)?;
                if !(slope_per_bpm >= 0.0) {
                    return Err(Error::Config(format!(
                        "slope_per_bpm must be >= 0, got {slope_per_bpm}"
                    )));
                }
            }
        }
        if !(self.jitter_std_ms >= 0.0) || !(self.sensor_noise_std >= 0.0) {
            return Err(Error::Config(
                "jitter_std_ms and sensor_noise_std must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Decode a clip to per-frame channel means.
///
/// Means are accumulated in integers and divided once, so the sigma = 0 path
/// is exact.
pub fn decode_video(clip: &VideoClip) -> Result<RecoveredSignal> {
    if clip.frames.is_empty() {
        return Err(Error::Input("cannot decode an empty clip".into()));
    }
    clip.validate()?;
    let pixels = clip.spec.pixels() as f64;
    let means: Vec<[f64; 3]> = clip
        .frames
        .par_iter()
        .map(|frame| {
            let mut sums = [0u64; 3];
            for px in frame.chunks_exact(3) {
                sums[0] += px[0] as u64;
                sums[1] += px[1] as u64;
                sums[2] += px[2] as u64;
            }
            [
                sums[0] as f64 / pixels,
                sums[1] as f64 / pixels,
                sums[2] as f64 / pixels,
            ]
        })
        .collect();
    Ok(RecoveredSignal {
        timestamps_s: clip.timestamps_s.clone(),
        means,
        nominal_fps: clip.spec.fps,
    })
}

/// Apply frame drops, timestamp jitter, and sensor noise.
///
/// `case_hr_bpm` feeds the HR-dependent drop mode; it is ignored by the
/// other modes. Deterministic given the config seed.
pub fn apply_degradation(
    signal: &RecoveredSignal,
    config: &DegradationConfig,
    case_hr_bpm: f64,
) -> Result<RecoveredSignal> {
    signal.validate()?;
    config.validate()?;
    let mut rng = SimRng::new(config.seed);

    let p = config.drop_mode.drop_probability(case_hr_bpm);
    let mut timestamps = Vec::with_capacity(signal.timestamps_s.len());
    let mut means = Vec::with_capacity(signal.means.len());
    for (t, m) in signal.timestamps_s.iter().zip(&signal.means) {
        if p > 0.0 && rng.uniform() < p {
            continue;
        }
        timestamps.push(*t);
        means.push(*m);
    }
    if timestamps.is_empty() {
        return Err(Error::DegenerateSignal(
            "degradation dropped every frame".into(),
        ));
    }

    if config.jitter_std_ms > 0.0 {
        let std_s = config.jitter_std_ms / 1000.0;
        let mut pairs: Vec<(f64, [f64; 3])> = timestamps
            .iter()
            .zip(&means)
            .map(|(&t, &m)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (t + std_s * z, m)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for i in 1..pairs.len() {
            if pairs[i].0 <= pairs[i - 1].0 {
                pairs[i].0 = pairs[i - 1].0 + MIN_TIMESTAMP_GAP_S;
            }
        }
        timestamps = pairs.iter().map(|p| p.0).collect();
        means = pairs.iter().map(|p| p.1).collect();
    }

    if config.sensor_noise_std > 0.0 {
        for m in &mut means {
            for v in m.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += config.sensor_noise_std * z;
            }
        }
    }

    let out = RecoveredSignal {
        timestamps_s: timestamps,
        means,
        nominal_fps: signal.nominal_fps,
    };
    out.validate()?;
    Ok(out)
}

fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    let decimals = (8 - v.abs().log10().floor() as i32).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// Write a recovered signal as `t_s,r_mean,g_mean,b_mean` CSV with 9
/// significant digits.
pub fn write_recovered(signal: &RecoveredSignal, path: impl AsRef<Path>) -> Result<()> {
    signal.validate()?;
    let mut out = String::from("t_s,r_mean,g_mean,b_mean\n");
    for (t, m) in signal.timestamps_s.iter().zip(&signal.means) {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_sig9(*t),
            fmt_sig9(m[0]),
            fmt_sig9(m[1]),
            fmt_sig9(m[2])
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a recovered signal written by [`write_recovered`].
pub fn load_recovered(path: impl AsRef<Path>, nominal_fps: f64) -> Result<RecoveredSignal> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "t_s,r_mean,g_mean,b_mean" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header 't_s,r_mean,g_mean,b_mean', got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut timestamps_s = Vec::new();
    let mut means = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields", lineno + 2)));
        }
        let mut vals = [0.0f64; 4];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        }
        timestamps_s.push(vals[0]);
        means.push([vals[1], vals[2], vals[3]]);
    }
    let signal = RecoveredSignal {
        timestamps_s,
        means,
        nominal_fps,
    };
    signal.validate()?;
    Ok(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_video, render_frame, FrameSpec, MappedSignal};

    fn ideal_signal(n: usize, fps: f64) -> RecoveredSignal {
        RecoveredSignal {
            timestamps_s: (0..n).map(|i| i as f64 / fps).collect(),
            means: (0..n).map(|i| [100.0, 150.0 + (i % 5) as f64, 200.0]).collect(),
            nominal_fps: fps,
        }
    }

    #[test]
    fn decode_sigma_zero_is_exact() {
        let spec = FrameSpec::default();
        let frame = render_frame(&[100.0, 100.0, 100.0], &spec, 0.0, 0).unwrap();
        let clip = VideoClip {
            frames: vec![frame; 4],
            spec,
            timestamps_s: (0..4).map(|i| i as f64 / 30.0).collect(),
        };
        let sig = decode_video(&clip).unwrap();
        for m in &sig.means {
            assert_eq!(m, &[100.0, 100.0, 100.0]);
        }
    }

    #[test]
    fn decode_tracks_dithered_targets() {
        let mapped = MappedSignal {
            targets: vec![
                [230.0, 150.0, 201.0],
                [230.0, 150.0, 199.0],
                [230.0, 150.0, 201.0],
            ],
            fps: 30.0,
        };
        let clip = encode_video(&mapped, &FrameSpec::default(), 2.0, 11).unwrap();
        let sig = decode_video(&clip).unwrap();
        let expect = [201.0, 199.0, 201.0];
        for (m, e) in sig.means.iter().zip(expect) {
            assert!((m[2] - e).abs() <= 0.05, "blue mean {} vs {e}", m[2]);
        }
    }

    #[test]
    fn decode_empty_clip_rejected() {
        let clip = VideoClip {
            frames: vec![],
            spec: FrameSpec::default(),
            timestamps_s: vec![],
        };
        assert!(matches!(decode_video(&clip), Err(Error::Input(_))));
    }

    #[test]
    fn identity_degradation() {
        let sig = ideal_signal(100, 30.0);
        let out = apply_degradation(&sig, &DegradationConfig::none(), 60.0).unwrap();
        assert_eq!(sig, out);
    }

    #[test]
    fn uniform_drop_survivor_count_in_binomial_band() {
        let sig = ideal_signal(600, 30.0);
        let cfg = DegradationConfig {
            drop_mode: DropMode::Uniform { p: 0.3 },
            jitter_std_ms: 0.0,
            sensor_noise_std: 0.0,
            seed: 42,
        };
        let out = apply_degradation(&sig, &cfg, 60.0).unwrap();
        let survivors = out.timestamps_s.len();
        // binomial mean 420, 3 sigma about 34
        assert!(
            (380..=460).contains(&survivors),
            "survivors {survivors} outside binomial band"
        );
        // reproducible
        let again = apply_degradation(&sig, &cfg, 60.0).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn drop_probability_one_rejected() {
        let cfg = DegradationConfig {
            drop_mode: DropMode::Uniform { p: 1.0 },
            jitter_std_ms: 0.0,
            sensor_noise_std: 0.0,
            seed: 0,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn hr_dependent_probability_shape() {
        let mode = DropMode::HrDependent {
            base_p: 0.05,
            slope_per_bpm: 0.005,
        };
        assert_eq!(mode.drop_probability(60.0), 0.05);
        assert_eq!(mode.drop_probability(120.0), 0.05);
        assert!((mode.drop_probability(180.0) - 0.35).abs() < 1e-12);
        assert_eq!(mode.drop_probability(500.0), 0.95);
    }

    #[test]
    fn jitter_keeps_timestamps_strictly_increasing() {
        let sig = ideal_signal(500, 30.0);
        let cfg = DegradationConfig {
            drop_mode: DropMode::None,
            jitter_std_ms: 20.0,
            sensor_noise_std: 0.0,
            seed: 5,
        };
        let out = apply_degradation(&sig, &cfg, 60.0).unwrap();
        assert!(out.timestamps_s.windows(2).all(|p| p[1] > p[0]));
        assert_eq!(out.timestamps_s.len(), 500);
    }

    #[test]
    fn recovered_csv_round_trip() {
        let sig = ideal_signal(20, 30.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        write_recovered(&sig, &path).unwrap();
        let back = load_recovered(&path, 30.0).unwrap();
        assert_eq!(back.means.len(), sig.means.len());
        for (a, b) in sig.means.iter().zip(&back.means) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-6);
            }
        }
    }
}
