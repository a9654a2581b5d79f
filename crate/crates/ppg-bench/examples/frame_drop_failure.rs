//! Reproduce an HR-dependent failure mode: a device that drops more frames
//! as the heart rate climbs degrades much faster at 180 bpm than at 60 bpm.
//! Also contrasts a timestamp-aware estimator with one that naively assumes
//! uniform sampling.
//!
//! Run: `cargo run --example frame_drop_failure`

use ppg_bench::dut::{apply_degradation, decode_video, DegradationConfig, DropMode};
use ppg_bench::encoder::{
    encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA,
};
use ppg_bench::estimator::{estimate_hr, EstimatorConfig};
use ppg_bench::metrics::frame_rate_stats;
use ppg_bench::waveform::{synthesize_ppg, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let profile = &ChannelProfile::standard_profiles()[0];
    let spec = FrameSpec {
        width: 160,
        height: 120,
        fps: 30.0,
    };
    let degradation = DegradationConfig {
        drop_mode: DropMode::HrDependent {
            base_p: 0.05,
            slope_per_bpm: 0.005,
        },
        jitter_std_ms: 0.0,
        sensor_noise_std: 0.0,
        seed: 21,
    };

    for hr in [60.0, 180.0] {
        let waveform = synthesize_ppg(&SynthConfig {
            heart_rate_bpm: hr,
            duration_s: 20.0,
            seed: 4,
            ..Default::default()
        })?;
        let mapped = map_ppg_to_rgb(&waveform, profile, spec.fps)?;
        let clip = encode_video(&mapped, &spec, DEFAULT_DITHER_SIGMA, 13)?;
        let clean = decode_video(&clip)?;
        let degraded = apply_degradation(&clean, &degradation, hr)?;

        let stats = frame_rate_stats(&degraded.timestamps_s, spec.fps)?;
        println!(
            "HR {hr:>3} bpm: drop p = {:.3}, {} of {} frames survive, effective {:.1} fps, {} inferred drops",
            degradation.drop_mode.drop_probability(hr),
            degraded.timestamps_s.len(),
            clean.timestamps_s.len(),
            stats.mean_fps,
            stats.drop_count
        );
        for aware in [true, false] {
            let est = estimate_hr(
                &degraded,
                &EstimatorConfig {
                    timestamp_aware: aware,
                    ..Default::default()
                },
            )?;
            let ape = 100.0 * (est.bpm - hr).abs() / hr;
            println!(
                "  {} resampling: {:.1} bpm (APE {:.2}%)",
                if aware { "timestamp-aware" } else { "naive          " },
                est.bpm,
                ape
            );
        }
    }
    Ok(())
}
