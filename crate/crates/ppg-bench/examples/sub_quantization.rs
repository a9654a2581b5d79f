//! Why dithering matters: a pulse amplitude of 1.0 pixel value spans a
//! single 8-bit step. Without dither the rendered frames quantize it away;
//! with dither the spatial mean recovers it cleanly.
//!
//! Run: `cargo run --example sub_quantization`

use ppg_bench::dut::decode_video;
use ppg_bench::encoder::{encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec};
use ppg_bench::metrics::pearson;
use ppg_bench::waveform::{synthesize_ppg, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let waveform = synthesize_ppg(&SynthConfig {
        heart_rate_bpm: 60.0,
        duration_s: 10.0,
        seed: 3,
        ..Default::default()
    })?;
    let profile = ChannelProfile {
        mean: [230.0, 150.0, 120.0],
        pulse_amplitude: [0.0, 1.0, 0.0], // one quantization step
        name: "hairline".to_string(),
    };
    let spec = FrameSpec::default();
    let mapped = map_ppg_to_rgb(&waveform, &profile, spec.fps)?;

    for sigma in [2.0, 0.0] {
        let clip = encode_video(&mapped, &spec, sigma, 11)?;
        let decoded = decode_video(&clip)?;
        let green = decoded.channel(1);
        let target: Vec<f64> = mapped.targets.iter().map(|t| t[1]).collect();
        match pearson(&green, &target) {
            Ok(r) => println!("sigma = {sigma}: r(decoded, target) = {r:.4}"),
            Err(e) => println!("sigma = {sigma}: {e}"),
        }
    }
    Ok(())
}
