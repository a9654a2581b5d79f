//! Mapping PPG waveforms to RGB frame targets and rendering dithered 8-bit
//! frames whose spatial mean carries the target at sub-integer precision.
//!
//! Each pixel of each channel is an independent draw from
//! `Normal(target, sigma^2)`, rounded and clamped. Averaging over the frame
//! recovers the floating-point target far below the 8-bit quantization step.
//! Frames are seeded per index from the clip seed, so rendering is
//! reproducible at any degree of parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dither::DitherSampler;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SimRng};
use crate::waveform::{resample, PpgWaveform};

/// Default dither standard deviation in pixel values.
pub const DEFAULT_DITHER_SIGMA: f64 = 2.0;

/// Per-channel brightness center and pulse amplitude in pixel units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    /// R, G, B brightness means in [0, 255].
    pub mean: [f64; 3],
    /// Peak-to-trough excursion per channel, in pixel values.
    pub pulse_amplitude: [f64; 3],
    pub name: String,
}

impl ChannelProfile {
    /// Check that every target the profile can produce stays inside the
    /// dither guard band `[4*sigma, 255 - 4*sigma]`.
    pub fn validate(&self, dither_sigma: f64) -> Result<()> {
        let guard = 4.0 * dither_sigma;
        for c in 0..3 {
            let (mean, amp) = (self.mean[c], self.pulse_amplitude[c]);
            if !(0.0..=255.0).contains(&mean) || amp < 0.0 {
                return Err(Error::Profile(format!(
                    "profile '{}' channel {c}: mean {mean}, amplitude {amp}",
                    self.name
                )));
            }
            if mean - amp / 2.0 - guard < 0.0 || mean + amp / 2.0 + guard > 255.0 {
                return Err(Error::Profile(format!(
                    "profile '{}' channel {c}: band [{}, {}] leaves the guard range",
                    self.name,
                    mean - amp / 2.0,
                    mean + amp / 2.0
                )));
            }
        }
        Ok(())
    }

    /// The four standard signal-strength profiles used by the standard test
    /// suite. Blue amplitudes bracket the 1-2 pixel range seen in real
    /// finger-over-camera videos; red is fixed and green scales with the
    /// blue strength factor.
    pub fn standard_profiles() -> Vec<ChannelProfile> {
        let blue = [(220.0, 4.0), (180.0, 2.0), (120.0, 1.0), (60.0, 0.5)];
        let names = ["strong", "medium", "weak", "faint"];
        blue.iter()
            .zip(names)
            .map(|(&(b_mean, b_amp), name)| {
                let factor = b_amp / 4.0;
                ChannelProfile {
                    mean: [230.0, 150.0, b_mean],
                    pulse_amplitude: [6.0, 3.0 * factor, b_amp],
                    name: name.to_string(),
                }
            })
            .collect()
    }
}

/// Video frame geometry and nominal rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            fps: 30.0,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.fps > 0.0) {
            return Err(Error::Config(format!(
                "invalid frame spec {}x{} @ {} fps",
                self.width, self.height, self.fps
            )));
        }
        // Dither averaging needs enough pixels to hit the mean-fidelity bound.
        if (self.width as u64) * (self.height as u64) < 1024 {
            return Err(Error::Config(format!(
                "frame must have at least 1024 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Per-frame floating-point RGB spatial-mean targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedSignal {
    pub targets: Vec<[f64; 3]>,
    pub fps: f64,
}

/// A sequence of interleaved-RGB 8-bit frames with timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    /// Each frame is `height * width * 3` bytes, row-major, R,G,B interleaved.
    pub frames: Vec<Vec<u8>>,
    pub spec: FrameSpec,
    pub timestamps_s: Vec<f64>,
}

impl VideoClip {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.frames.len() != self.timestamps_s.len() {
            return Err(Error::Input(format!(
                "{} frames but {} timestamps",
                self.frames.len(),
                self.timestamps_s.len()
            )));
        }
        let expect = self.spec.pixels() * 3;
        if let Some(f) = self.frames.iter().find(|f| f.len() != expect) {
            return Err(Error::Input(format!(
                "frame byte length {} does not match spec ({expect})",
                f.len()
            )));
        }
        if self.timestamps_s.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Input("timestamps not strictly increasing".into()));
        }
        Ok(())
    }
}

/// Map a waveform to per-frame RGB targets: resample to `fps`, min-max
/// normalize to `p` in [0, 1], then `target = mean + amplitude * (0.5 - p)`.
///
/// Higher PPG means more blood volume and more light absorption, so the
/// mapping inverts: waveform maxima become pixel minima.
pub fn map_ppg_to_rgb(
    waveform: &PpgWaveform,
    profile: &ChannelProfile,
    fps: f64,
) -> Result<MappedSignal> {
    if !(fps > 0.0) {
        return Err(Error::Config(format!("fps must be positive, got {fps}")));
    }
    let at_rate = resample(waveform, fps)?;
    let min = at_rate.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = at_rate.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateSignal(
            "cannot map a constant waveform".into(),
        ));
    }
    let span = max - min;
    let targets: Vec<[f64; 3]> = at_rate
        .samples
        .iter()
        .map(|&s| {
            let p = (s - min) / span;
            [
                profile.mean[0] + profile.pulse_amplitude[0] * (0.5 - p),
                profile.mean[1] + profile.pulse_amplitude[1] * (0.5 - p),
                profile.mean[2] + profile.pulse_amplitude[2] * (0.5 - p),
            ]
        })
        .collect();
    for t in &targets {
        for c in 0..3 {
            if !(0.0..=255.0).contains(&t[c]) {
                return Err(Error::Profile(format!(
                    "profile '{}' maps channel {c} to {} outside [0, 255]",
                    profile.name, t[c]
                )));
            }
        }
    }
    Ok(MappedSignal { targets, fps })
}

fn check_target(target: &[f64; 3], dither_sigma: f64) -> Result<()> {
    if !(dither_sigma >= 0.0) {
        return Err(Error::Config(format!("dither sigma must be >= 0, got {dither_sigma}")));
    }
    let guard = 4.0 * dither_sigma;
    for (c, &t) in target.iter().enumerate() {
        if !(t >= guard && t <= 255.0 - guard) {
            return Err(Error::Range(format!(
                "channel {c} target {t} outside guard band [{guard}, {}]",
                255.0 - guard
            )));
        }
    }
    Ok(())
}

/// Render one dithered frame. Deterministic given `frame_seed`.
///
/// With `dither_sigma == 0` every pixel is the rounded target exactly.
pub fn render_frame(
    target_rgb: &[f64; 3],
    spec: &FrameSpec,
    dither_sigma: f64,
    frame_seed: u64,
) -> Result<Vec<u8>> {
    spec.validate()?;
    check_target(target_rgb, dither_sigma)?;
    let pixels = spec.pixels();
    let mut data = vec![0u8; pixels * 3];
    if dither_sigma == 0.0 {
        let vals: [u8; 3] = std::array::from_fn(|c| target_rgb[c].round() as u8);
        for px in data.chunks_exact_mut(3) {
            px.copy_from_slice(&vals);
        }
        return Ok(data);
    }
    let mut rng = SimRng::new(frame_seed);
    // The alias samplers draw the exact rounded-and-clamped normal
    // distribution with one uniform per pixel per channel.
    let samplers: [DitherSampler; 3] =
        std::array::from_fn(|c| DitherSampler::new(target_rgb[c], dither_sigma));
    for px in data.chunks_exact_mut(3) {
        px[0] = samplers[0].sample(&mut rng);
        px[1] = samplers[1].sample(&mut rng);
        px[2] = samplers[2].sample(&mut rng);
    }
    Ok(data)
}

/// Render a clip, one frame per target, timestamps at `i / fps`.
///
/// Frame seeds are `derive_seed(clip_seed, index)`, so the output is
/// identical no matter how many worker threads render it.
pub fn encode_video(
    mapped: &MappedSignal,
    spec: &FrameSpec,
    dither_sigma: f64,
    clip_seed: u64,
) -> Result<VideoClip> {
    spec.validate()?;
    if mapped.targets.is_empty() {
        return Err(Error::Input("mapped signal has no targets".into()));
    }
    for t in &mapped.targets {
        check_target(t, dither_sigma)?;
    }
    let frames: Vec<Vec<u8>> = mapped
        .targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| render_frame(t, spec, dither_sigma, derive_seed(clip_seed, i as u64)))
        .collect::<Result<_>>()?;
    let timestamps_s = (0..mapped.targets.len())
        .map(|i| i as f64 / mapped.fps)
        .collect();
    Ok(VideoClip {
        frames,
        spec: FrameSpec {
            fps: mapped.fps,
            ..*spec
        },
        timestamps_s,
    })
}

/// Exact spatial mean of one channel of an interleaved frame, integer
/// accumulation with a single final division.
#[cfg(test)]
pub(crate) fn channel_mean(frame: &[u8], channel: usize) -> f64 {
    let mut sum: u64 = 0;
    for px in frame.chunks_exact(3) {
        sum += px[channel] as u64;
    }
    sum as f64 / (frame.len() / 3) as f64
}
