//! Diagnose a motion-locked failure: strong periodic motion bursts drive the
//! estimator toward the motion frequency, and a synchronized accelerometer
//! trace pins the blame.
//!
//! Run: `cargo run --example motion_artifact_diagnosis`

use ppg_bench::dut::{decode_video, RecoveredSignal};
use ppg_bench::encoder::{
    encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA,
};
use ppg_bench::estimator::{estimate_hr, EstimatorConfig};
use ppg_bench::metrics::{dominant_frequency, AccelTrace};
use ppg_bench::waveform::{synthesize_ppg, PpgWaveform, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let hr = 70.0;
    let motion_hz = 1.5; // tapping / tremor at 90 bpm
    let base = synthesize_ppg(&SynthConfig {
        heart_rate_bpm: hr,
        duration_s: 20.0,
        seed: 2,
        ..Default::default()
    })?;

    // Motion swamps the pulse 5:1 in the optical path.
    let fs = base.sample_rate_hz;
    let samples: Vec<f64> = base
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let t = i as f64 / fs;
            s + 5.0 * (2.0 * std::f64::consts::PI * motion_hz * t).sin()
        })
        .collect();
    let corrupted = PpgWaveform::new(samples, fs, "motion-corrupted")?;

    let mapped = map_ppg_to_rgb(&corrupted, &ChannelProfile::standard_profiles()[0], 30.0)?;
    let clip = encode_video(&mapped, &FrameSpec::default(), DEFAULT_DITHER_SIGMA, 19)?;
    let signal: RecoveredSignal = decode_video(&clip)?;
    let est = estimate_hr(&signal, &EstimatorConfig::default())?;
    println!("app reads {:.1} bpm; reference says {hr} bpm", est.bpm);

    // The bench accelerometer saw the same motion.
    let accel = AccelTrace {
        timestamps_s: (0..2000).map(|i| i as f64 / 100.0).collect(),
        magnitude: (0..2000)
            .map(|i| {
                let t = i as f64 / 100.0;
                9.81 + 2.0 * (2.0 * std::f64::consts::PI * motion_hz * t).sin()
            })
            .collect(),
    };
    let dom = dominant_frequency(&accel, (0.5, 4.0))?;
    println!(
        "accelerometer dominant frequency: {:.2} Hz = {:.0} bpm; explains the reading: {}",
        dom.freq_hz,
        dom.freq_hz * 60.0,
        dom.matches_bpm(est.bpm, 0.1)
    );
    Ok(())
}
