//! Round-trip a waveform through the full video path: map to RGB targets,
//! render dithered frames, write a PPGV file, read it back, and decode to
//! channel means. Prints the worst per-frame mean error.
//!
//! Run: `cargo run --example encode_and_decode`

use ppg_bench::container::{read_video, write_video};
use ppg_bench::dut::decode_video;
use ppg_bench::encoder::{
    encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA,
};
use ppg_bench::waveform::{synthesize_ppg, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let waveform = synthesize_ppg(&SynthConfig {
        heart_rate_bpm: 80.0,
        duration_s: 10.0,
        seed: 1,
        ..Default::default()
    })?;

    let profile = &ChannelProfile::standard_profiles()[0]; // strong
    let spec = FrameSpec {
        width: 160,
        height: 120,
        fps: 30.0,
    };
    let mapped = map_ppg_to_rgb(&waveform, profile, spec.fps)?;
    let clip = encode_video(&mapped, &spec, DEFAULT_DITHER_SIGMA, 9)?;

    write_video(&clip, "clip.ppgv")?;
    let reread = read_video("clip.ppgv")?;
    assert_eq!(clip.frames, reread.frames);

    let signal = decode_video(&reread)?;
    let mut worst = 0.0f64;
    for (i, means) in signal.means.iter().enumerate() {
        for c in 0..3 {
            worst = worst.max((means[c] - mapped.targets[i][c]).abs());
        }
    }
    println!(
        "{} frames of {}x{}; worst |decoded mean - target| = {:.4} (8-bit step is 1.0)",
        clip.frames.len(),
        spec.width,
        spec.height,
        worst
    );
    Ok(())
}
