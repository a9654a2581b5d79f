//! Estimate heart rate from a decoded recording with both methods: spectral
//! (FFT peak with parabolic refinement) and peak detection (median
//! inter-beat interval).
//!
//! Run: `cargo run --example estimate_heart_rate`

use ppg_bench::dut::{apply_degradation, decode_video, DegradationConfig, DropMode};
use ppg_bench::encoder::{
    encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA,
};
use ppg_bench::estimator::{estimate_hr, EstimatorConfig, HrMethod};
use ppg_bench::waveform::{synthesize_ppg, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let hr = 95.0;
    let waveform = synthesize_ppg(&SynthConfig {
        heart_rate_bpm: hr,
        duration_s: 20.0,
        rsa_depth: 0.03,
        seed: 8,
        ..Default::default()
    })?;
    let mapped = map_ppg_to_rgb(
        &waveform,
        &ChannelProfile::standard_profiles()[1], // medium
        30.0,
    )?;
    let clip = encode_video(&mapped, &FrameSpec::default(), DEFAULT_DITHER_SIGMA, 17)?;
    let signal = apply_degradation(
        &decode_video(&clip)?,
        &DegradationConfig {
            drop_mode: DropMode::Uniform { p: 0.02 },
            jitter_std_ms: 2.0,
            sensor_noise_std: 0.05,
            seed: 33,
        },
        hr,
    )?;

    for method in [HrMethod::Spectral, HrMethod::Peak] {
        let est = estimate_hr(
            &signal,
            &EstimatorConfig {
                method,
                ..Default::default()
            },
        )?;
        println!(
            "{:?}: {:.2} bpm (truth {hr}), quality {:.3}",
            method, est.bpm, est.quality
        );
    }
    Ok(())
}
