//! Command-line front end for the bench toolkit. Thin dispatch onto the
//! library; every capability is also available as a runnable example.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ppg_bench::container::{dump_frames_png, read_video, write_video};
use ppg_bench::dut::{
    apply_degradation, decode_video, load_recovered, write_recovered, DegradationConfig, DropMode,
};
use ppg_bench::encoder::{encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA};
use ppg_bench::estimator::{estimate_hr, Channel, EstimatorConfig, HrMethod};
use ppg_bench::harness::{
    build_standard_suite, generate_report, load_report, run_suite, ReportFormat, RunSettings,
    TestSuite,
};
use ppg_bench::metrics::{dominant_frequency, AccelTrace};
use ppg_bench::waveform::{add_noise, load_waveform, synthesize_ppg, write_waveform, SynthConfig};

#[derive(Parser)]
#[command(name = "ppg-bench", about = "Bench-testing toolkit for camera-based heart-rate apps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SynthArgs {
    /// Target heart rate in bpm.
    #[arg(long, default_value_t = 60.0)]
    hr: f64,
    /// Duration in seconds.
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    #[arg(long, default_value_t = 0.25)]
    rsa_freq: f64,
    #[arg(long, default_value_t = 0.0)]
    rsa_depth: f64,
    #[arg(long, default_value_t = 0.05)]
    drift_freq: f64,
    #[arg(long, default_value_t = 0.0)]
    drift_amplitude: f64,
    #[arg(long, default_value_t = 50.0)]
    powerline_freq: f64,
    #[arg(long, default_value_t = 0.0)]
    powerline_amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    motion_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    motion_amplitude: f64,
    /// Add white Gaussian noise at this SNR in dB after synthesis.
    #[arg(long)]
    snr_db: Option<f64>,
}

impl SynthArgs {
    fn config(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            heart_rate_bpm: self.hr,
            duration_s: self.duration,
            sample_rate_hz: self.rate,
            rsa_freq_hz: self.rsa_freq,
            rsa_depth: self.rsa_depth,
            drift_freq_hz: self.drift_freq,
            drift_amplitude: self.drift_amplitude,
            powerline_freq_hz: self.powerline_freq,
            powerline_amplitude: self.powerline_amplitude,
            motion_burst_rate_per_min: self.motion_rate,
            motion_burst_amplitude: self.motion_amplitude,
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct DegradationArgs {
    /// Uniform per-frame drop probability.
    #[arg(long, default_value_t = 0.0)]
    drop_p: f64,
    /// HR-dependent drops: base probability (used with --drop-slope).
    #[arg(long)]
    drop_base: Option<f64>,
    /// HR-dependent drops: probability increase per bpm above 120.
    #[arg(long, default_value_t = 0.0)]
    drop_slope: f64,
    /// Timestamp jitter standard deviation in milliseconds.
    #[arg(long, default_value_t = 0.0)]
    jitter_ms: f64,
    /// Additive sensor noise standard deviation in pixel units.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
}

impl DegradationArgs {
    fn config(&self, seed: u64) -> DegradationConfig {
        let drop_mode = if let Some(base_p) = self.drop_base {
            DropMode::HrDependent {
                base_p,
                slope_per_bpm: self.drop_slope,
            }
        } else if self.drop_p > 0.0 {
            DropMode::Uniform { p: self.drop_p }
        } else {
            DropMode::None
        };
        DegradationConfig {
            drop_mode,
            jitter_std_ms: self.jitter_ms,
            sensor_noise_std: self.noise_std,
            seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Spectral,
    Peak,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    R,
    G,
    B,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Spectral)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = ChannelArg::G)]
    channel: ChannelArg,
    /// Search band in bpm.
    #[arg(long, default_value_t = 30.0)]
    band_low: f64,
    #[arg(long, default_value_t = 240.0)]
    band_high: f64,
    /// Ignore timestamps and assume uniform sampling at the nominal fps.
    #[arg(long)]
    naive_resampling: bool,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            method: match self.method {
                MethodArg::Spectral => HrMethod::Spectral,
                MethodArg::Peak => HrMethod::Peak,
            },
            band_bpm: (self.band_low, self.band_high),
            channel: match self.channel {
                ChannelArg::R => Channel::R,
                ChannelArg::G => Channel::G,
                ChannelArg::B => Channel::B,
            },
            resample_fps: None,
            timestamp_aware: !self.naive_resampling,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a PPG waveform and write it as CSV.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a waveform (CSV file or synthesized) into a PPGV test video.
    Encode {
        /// Waveform CSV; synthesized from the synth flags when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthArgs,
        /// Standard profile name (strong, medium, weak, faint) or a JSON file.
        #[arg(long, default_value = "strong")]
        profile: String,
        #[arg(long, default_value_t = 320)]
        width: u32,
        #[arg(long, default_value_t = 240)]
        height: u32,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = DEFAULT_DITHER_SIGMA)]
        dither_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also dump each frame as an indexed PNG into this directory.
        #[arg(long)]
        png_dir: Option<PathBuf>,
    },
    /// Decode a PPGV video to a recovered-signal CSV, optionally through a
    /// degraded virtual device under test.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        degradation: DegradationArgs,
        /// Case heart rate feeding the HR-dependent drop model.
        #[arg(long, default_value_t = 60.0)]
        hr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate heart rate from a recovered-signal CSV.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Nominal fps of the recording.
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Build or run a test suite.
    Suite {
        #[command(subcommand)]
        command: SuiteCommand,
    },
    /// Convert a JSON report to CSV or print a summary.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "summary")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether an accelerometer trace explains an erroneous HR.
    Accel {
        #[arg(long)]
        input: PathBuf,
        /// The HR reading to test against the motion spectrum.
        #[arg(long)]
        bpm: f64,
        #[arg(long, default_value_t = 0.5)]
        band_low: f64,
        #[arg(long, default_value_t = 4.0)]
        band_high: f64,
        /// Match tolerance in Hz.
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum SuiteCommand {
    /// Write the standard 20-case suite (or inspect a custom one) as JSON.
    Build {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a suite through the virtual DUT and write a report.
    Run {
        /// Suite JSON; the standard suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repetitions: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        degradation: DegradationArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        /// Replay identical videos in every repetition.
        #[arg(long)]
        fixed_videos: bool,
        #[arg(long, default_value_t = DEFAULT_DITHER_SIGMA)]
        dither_sigma: f64,
        /// Write each clip as PPGV into this directory instead of streaming.
        #[arg(long)]
        materialize_dir: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_profile(name: &str) -> ppg_bench::Result<ChannelProfile> {
    if let Some(p) = ChannelProfile::standard_profiles()
        .into_iter()
        .find(|p| p.name == name)
    {
        return Ok(p);
    }
    let path = PathBuf::from(name);
    if path.exists() {
        let profile: ChannelProfile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        return Ok(profile);
    }
    Err(ppg_bench::Error::Config(format!(
        "unknown profile '{name}' (standard: strong, medium, weak, faint, or a JSON file)"
    )))
}

fn report_format(name: &str) -> ppg_bench::Result<ReportFormat> {
    match name {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(ppg_bench::Error::Config(format!(
            "unknown report format '{other}' (json or csv)"
        ))),
    }
}

fn run(cli: Cli) -> ppg_bench::Result<()> {
    match cli.command {
        Command::Synth { synth, seed, out } => {
            let mut waveform = synthesize_ppg(&synth.config(seed))?;
            if let Some(snr_db) = synth.snr_db {
                waveform = add_noise(&waveform, snr_db, seed.wrapping_add(1))?;
            }
            write_waveform(&waveform, &out)?;
            println!("wrote {} samples at {} Hz to {}", waveform.samples.len(), waveform.sample_rate_hz, out.display());
        }
        Command::Encode {
            input,
            synth,
            profile,
            width,
            height,
            fps,
            dither_sigma,
            seed,
            out,
            png_dir,
        } => {
            let waveform = match input {
                Some(path) => load_waveform(path)?,
                None => {
                    let mut w = synthesize_ppg(&synth.config(seed))?;
                    if let Some(snr_db) = synth.snr_db {
                        w = add_noise(&w, snr_db, seed.wrapping_add(1))?;
                    }
                    w
                }
            };
            let profile = load_profile(&profile)?;
            profile.validate(dither_sigma)?;
            let spec = FrameSpec { width, height, fps };
            let mapped = map_ppg_to_rgb(&waveform, &profile, fps)?;
            let clip = encode_video(&mapped, &spec, dither_sigma, seed)?;
            write_video(&clip, &out)?;
            println!("wrote {} frames ({width}x{height} @ {fps} fps) to {}", clip.frames.len(), out.display());
            if let Some(dir) = png_dir {
                dump_frames_png(&clip, &dir)?;
                println!("dumped PNG frames to {}", dir.display());
            }
        }
        Command::Decode {
            input,
            degradation,
            hr,
            seed,
            out,
        } => {
            let clip = read_video(&input)?;
            let signal = decode_video(&clip)?;
            let degraded = apply_degradation(&signal, &degradation.config(seed), hr)?;
            write_recovered(&degraded, &out)?;
            println!(
                "decoded {} frames, {} surviving after degradation, wrote {}",
                signal.timestamps_s.len(),
                degraded.timestamps_s.len(),
                out.display()
            );
        }
        Command::Estimate { input, fps, estimator } => {
            let signal = load_recovered(&input, fps)?;
            let estimate = estimate_hr(&signal, &estimator.config())?;
            println!("{:.2} bpm (method {:?}, quality {:.3})", estimate.bpm, estimate.method, estimate.quality);
        }
        Command::Suite { command } => match command {
            SuiteCommand::Build { seed, out } => {
                let suite = build_standard_suite(seed);
                suite.save(&out)?;
                println!("wrote {} cases to {}", suite.cases.len(), out.display());
            }
            SuiteCommand::Run {
                suite,
                repetitions,
                seed,
                degradation,
                estimator,
                fixed_videos,
                dither_sigma,
                materialize_dir,
                format,
                out,
            } => {
                let suite = match suite {
                    Some(path) => TestSuite::load(path)?,
                    None => build_standard_suite(seed),
                };
                let settings = RunSettings {
                    degradation: degradation.config(seed),
                    estimator: estimator.config(),
                    repetitions,
                    seed,
                    fixed_videos,
                    dither_sigma,
                    materialize_dir,
                };
                let result = run_suite(&suite, &settings)?;
                generate_report(&result, report_format(&format)?, &out)?;
                println!(
                    "suite '{}': MAPE {:.3}% (CI95 upper {:.3}%), mean r {:.4}, pass={}",
                    result.suite,
                    result.aggregates.mape_pct,
                    result.aggregates.ci95_upper_pct,
                    result.aggregates.mean_r,
                    result.pass
                );
                println!("wrote report to {}", out.display());
            }
        },
        Command::Report { input, format, out } => {
            let result = load_report(&input)?;
            match format.as_str() {
                "summary" => {
                    println!("suite:        {}", result.suite);
                    println!("digest:       {}", result.config_digest);
                    println!("repetitions:  {}", result.repetitions);
                    println!("videos:       {}", result.videos);
                    println!("cases:        {} ({} ok)", result.cases.len(), result.cases.iter().filter(|c| c.status == "ok").count());
                    println!("MAPE:         {:.4}% (CoV {:.2}%)", result.aggregates.mape_pct, result.aggregates.mape_cov_pct);
                    println!("mean xcorr r: {:.4} (CoV {:.2}%)", result.aggregates.mean_r, result.aggregates.r_cov_pct);
                    println!("CI95 upper:   {:.4}%", result.aggregates.ci95_upper_pct);
                    println!("pass:         {}", result.pass);
                }
                "csv" => {
                    let out = out.ok_or_else(|| {
                        ppg_bench::Error::Config("--out is required for csv output".into())
                    })?;
                    generate_report(&result, ReportFormat::Csv, &out)?;
                    println!("wrote {}", out.display());
                }
                other => {
                    return Err(ppg_bench::Error::Config(format!(
                        "unknown format '{other}' (summary or csv)"
                    )))
                }
            }
        }
        Command::Accel {
            input,
            bpm,
            band_low,
            band_high,
            tol,
        } => {
            let trace = AccelTrace::load(&input)?;
            let dom = dominant_frequency(&trace, (band_low, band_high))?;
            let matched = dom.matches_bpm(bpm, tol);
            println!(
                "dominant motion frequency {:.3} Hz ({:.1} bpm); {} {bpm} bpm within {tol} Hz",
                dom.freq_hz,
                dom.freq_hz * 60.0,
                if matched { "MATCHES" } else { "does not match" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
