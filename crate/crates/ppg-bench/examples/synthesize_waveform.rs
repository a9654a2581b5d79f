//! Synthesize a PPG waveform with respiratory modulation, baseline drift,
//! and SNR-controlled noise, then write it as CSV.
//!
//! Run: `cargo run --example synthesize_waveform`

use ppg_bench::waveform::{add_noise, synthesize_ppg, write_waveform, SynthConfig};

fn main() -> ppg_bench::Result<()> {
    let cfg = SynthConfig {
        heart_rate_bpm: 72.0,
        duration_s: 30.0,
        sample_rate_hz: 100.0,
        rsa_depth: 0.05, // +/-5% HR swing at the respiratory rate
        drift_amplitude: 0.1,
        seed: 42,
        ..Default::default()
    };
    let clean = synthesize_ppg(&cfg)?;
    let noisy = add_noise(&clean, 20.0, 7)?;

    let min = clean.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = clean.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{}: {} samples, {:.1} s, range [{:.3}, {:.3}]",
        clean.label,
        clean.samples.len(),
        clean.duration_s(),
        min,
        max
    );

    write_waveform(&clean, "waveform_clean.csv")?;
    write_waveform(&noisy, "waveform_snr20db.csv")?;
    println!("wrote waveform_clean.csv and waveform_snr20db.csv");
    Ok(())
}
