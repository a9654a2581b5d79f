//! Suite definition and the closed-loop bench runner: synthesize, map,
//! encode, decode through the virtual DUT, estimate, and score.
//!
//! Seeds for every repetition and case are derived from the master seed, so
//! a run is a pure function of (suite, settings) at any parallelism level.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::container::write_video;
use crate::dut::{apply_degradation, decode_video, DegradationConfig, RecoveredSignal};
use crate::encoder::{
    encode_video, map_ppg_to_rgb, render_frame, ChannelProfile, FrameSpec, MappedSignal,
    DEFAULT_DITHER_SIGMA,
};
use crate::error::{Error, Result};
use crate::estimator::{estimate_hr, EstimatorConfig};
use crate::metrics::{
    classify_accuracy, coefficient_of_variation, frame_rate_stats, mape, xcorr_aligned,
    PairedMeasurements,
};
use crate::rng::{derive_seed, derive_seed_str};
use crate::waveform::{load_waveform, synthesize_ppg, PpgWaveform, SynthConfig};

/// Maximum alignment search window for the per-case cross-correlation.
const XCORR_MAX_LAG_S: f64 = 1.0;

/// Where a case's input waveform comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformSource {
    Synth { config: SynthConfig },
    File { path: PathBuf },
}

/// One bench test case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub waveform_source: WaveformSource,
    pub profile: ChannelProfile,
    pub spec: FrameSpec,
    pub expected_bpm: f64,
    pub duration_s: f64,
}

/// An ordered set of test cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub name: String,
    pub cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for case in &self.cases {
            if !seen.insert(&case.id) {
                return Err(Error::Config(format!("duplicate case id '{}'", case.id)));
            }
            if !(case.expected_bpm > 0.0) {
                return Err(Error::Config(format!(
                    "case '{}': expected_bpm must be positive",
                    case.id
                )));
            }
            if let WaveformSource::Synth { config } = &case.waveform_source {
                config.validate()?;
                if (config.heart_rate_bpm - case.expected_bpm).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "case '{}': expected_bpm {} disagrees with synth HR {}",
                        case.id, case.expected_bpm, config.heart_rate_bpm
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let suite: TestSuite = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        suite.validate()?;
        Ok(suite)
    }
}

/// The standard 20-case suite: HRs {60, 80, 100, 120, 180} bpm crossed with
/// the four standard signal-strength profiles, 20 s per case, clean
/// waveforms.
pub fn build_standard_suite(seed: u64) -> TestSuite {
    let hrs = [60.0, 80.0, 100.0, 120.0, 180.0];
    let profiles = ChannelProfile::standard_profiles();
    let mut cases = Vec::with_capacity(hrs.len() * profiles.len());
    for &hr in &hrs {
        for profile in &profiles {
            let id = format!("hr{:03.0}-{}", hr, profile.name);
            cases.push(TestCase {
                id: id.clone(),
                waveform_source: WaveformSource::Synth {
                    config: SynthConfig {
                        heart_rate_bpm: hr,
                        duration_s: 20.0,
                        sample_rate_hz: 100.0,
                        seed: derive_seed_str(seed, &id),
                        ..Default::default()
                    },
                },
                profile: profile.clone(),
                spec: FrameSpec::default(),
                expected_bpm: hr,
                duration_s: 20.0,
            });
        }
    }
    TestSuite {
        name: "standard-20".to_string(),
        cases,
    }
}

/// Everything a run needs besides the suite itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub degradation: DegradationConfig,
    pub estimator: EstimatorConfig,
    pub repetitions: u32,
    pub seed: u64,
    /// When true, every repetition replays identical videos; otherwise the
    /// videos are regenerated per repetition with derived seeds.
    pub fixed_videos: bool,
    pub dither_sigma: f64,
    /// Write each clip as a PPGV file into this directory instead of
    /// streaming in memory.
    pub materialize_dir: Option<PathBuf>,
}

impl RunSettings {
    pub fn new(degradation: DegradationConfig, estimator: EstimatorConfig, repetitions: u32, seed: u64) -> Self {
        Self {
            degradation,
            estimator,
            repetitions,
            seed,
            fixed_videos: false,
            dither_sigma: DEFAULT_DITHER_SIGMA,
            materialize_dir: None,
        }
    }
}

/// One (repetition, case) outcome. Failed cases carry the error in `status`
/// and leave the measurements empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub repetition: u32,
    pub expected_bpm: f64,
    pub measured_bpm: Option<f64>,
    pub ape_pct: Option<f64>,
    pub xcorr_r: Option<f64>,
    pub lag_s: Option<f64>,
    pub drop_count: Option<u64>,
    pub status: String,
}

/// Per-repetition aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionAggregate {
    pub repetition: u32,
    pub mape_pct: f64,
    pub mean_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mape_pct: f64,
    pub mape_cov_pct: f64,
    pub mean_r: f64,
    pub r_cov_pct: f64,
    pub ci95_upper_pct: f64,
}

/// Full result of a bench run; serializes to the JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub suite: String,
    pub config_digest: String,
    pub repetitions: u32,
    /// "in-memory" or "materialized".
    pub videos: String,
    pub cases: Vec<CaseRecord>,
    pub per_repetition: Vec<RepetitionAggregate>,
    pub aggregates: Aggregates,
    pub pass: bool,
}

/// FNV-1a 64 over the canonical JSON of (suite, settings).
fn config_digest(suite: &TestSuite, settings: &RunSettings) -> Result<String> {
    let bytes = serde_json::to_vec(&(suite, settings))?;
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{h:016x}"))
}

/// Render and average in one pass, frame by frame, without materializing the
/// clip. Identical to `decode_video(encode_video(..))` because frames are
/// independently seeded.
fn encode_decode_streaming(
    mapped: &MappedSignal,
    spec: &FrameSpec,
    dither_sigma: f64,
    clip_seed: u64,
) -> Result<RecoveredSignal> {
    spec.validate()?;
    if mapped.targets.is_empty() {
        return Err(Error::Input("mapped signal has no targets".into()));
    }
    let pixels = spec.pixels() as f64;
    let means: Vec<[f64; 3]> = mapped
        .targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let frame = render_frame(t, spec, dither_sigma, derive_seed(clip_seed, i as u64))?;
            let mut sums = [0u64; 3];
            for px in frame.chunks_exact(3) {
                sums[0] += px[0] as u64;
                sums[1] += px[1] as u64;
                sums[2] += px[2] as u64;
            }
            Ok([
                sums[0] as f64 / pixels,
                sums[1] as f64 / pixels,
                sums[2] as f64 / pixels,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(RecoveredSignal {
        timestamps_s: (0..mapped.targets.len()).map(|i| i as f64 / mapped.fps).collect(),
        means,
        nominal_fps: mapped.fps,
    })
}

fn case_waveform(case: &TestCase, synth_seed: u64) -> Result<PpgWaveform> {
    match &case.waveform_source {
        WaveformSource::Synth { config } => {
            let cfg = SynthConfig {
                seed: synth_seed,
                ..config.clone()
            };
            synthesize_ppg(&cfg)
        }
        WaveformSource::File { path } => load_waveform(path),
    }
}

struct CaseOutcome {
    record: CaseRecord,
}

fn run_one(
    case: &TestCase,
    settings: &RunSettings,
    repetition: u32,
) -> CaseOutcome {
    let video_rep = if settings.fixed_videos { 0 } else { repetition as u64 };
    let video_base = derive_seed_str(derive_seed(settings.seed, video_rep), &case.id);
    let deg_base = derive_seed_str(derive_seed(settings.seed, repetition as u64), &case.id);

    let result: Result<CaseRecord> = (|| {
        let waveform = case_waveform(case, derive_seed(video_base, 1))?;
        let mapped = map_ppg_to_rgb(&waveform, &case.profile, case.spec.fps)?;
        let clip_seed = derive_seed(video_base, 2);
        let ideal = if let Some(dir) = &settings.materialize_dir {
            let clip = encode_video(&mapped, &case.spec, settings.dither_sigma, clip_seed)?;
            std::fs::create_dir_all(dir)?;
            write_video(
                &clip,
                dir.join(format!("{}-rep{repetition:03}.ppgv", case.id)),
            )?;
            decode_video(&clip)?
        } else {
            encode_decode_streaming(&mapped, &case.spec, settings.dither_sigma, clip_seed)?
        };
        let degradation = DegradationConfig {
            seed: derive_seed(deg_base, 3),
            ..settings.degradation
        };
        let seen = apply_degradation(&ideal, &degradation, case.expected_bpm)?;
        let estimate = estimate_hr(&seen, &settings.estimator)?;
        let ape_pct = 100.0 * (estimate.bpm - case.expected_bpm).abs() / case.expected_bpm;
        let xcorr = xcorr_aligned(&waveform, &seen, XCORR_MAX_LAG_S, settings.estimator.channel)?;
        let stats = frame_rate_stats(&seen.timestamps_s, seen.nominal_fps)?;
        Ok(CaseRecord {
            id: case.id.clone(),
            repetition,
            expected_bpm: case.expected_bpm,
            measured_bpm: Some(estimate.bpm),
            ape_pct: Some(ape_pct),
            xcorr_r: Some(xcorr.r),
            lag_s: Some(xcorr.lag_s),
            drop_count: Some(stats.drop_count),
            status: "ok".to_string(),
        })
    })();

    let record = result.unwrap_or_else(|e| CaseRecord {
        id: case.id.clone(),
        repetition,
        expected_bpm: case.expected_bpm,
        measured_bpm: None,
        ape_pct: None,
        xcorr_r: None,
        lag_s: None,
        drop_count: None,
        status: format!("error: {e}"),
    });
    CaseOutcome { record }
}

/// Run every repetition of every case and aggregate.
pub fn run_suite(suite: &TestSuite, settings: &RunSettings) -> Result<RunResult> {
    suite.validate()?;
    settings.degradation.validate()?;
    settings.estimator.validate()?;
    if settings.repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    for case in &suite.cases {
        case.profile.validate(settings.dither_sigma)?;
    }

    let jobs: Vec<(u32, usize)> = (0..settings.repetitions)
        .flat_map(|rep| (0..suite.cases.len()).map(move |c| (rep, c)))
        .collect();
    let mut records: Vec<CaseRecord> = jobs
        .par_iter()
        .map(|&(rep, c)| run_one(&suite.cases[c], settings, rep).record)
        .collect();
    // Deterministic report order regardless of scheduling.
    records.sort_by(|a, b| (a.repetition, &a.id).cmp(&(b.repetition, &b.id)));

    let ok: Vec<&CaseRecord> = records.iter().filter(|r| r.status == "ok").collect();
    if ok.is_empty() {
        return Err(Error::Run("every case failed".into()));
    }

    let pairs = PairedMeasurements {
        expected_bpm: ok.iter().map(|r| r.expected_bpm).collect(),
        measured_bpm: ok.iter().map(|r| r.measured_bpm.unwrap()).collect(),
    };
    let mape_res = mape(&pairs)?;
    let mean_r = ok.iter().map(|r| r.xcorr_r.unwrap()).sum::<f64>() / ok.len() as f64;

    let mut per_repetition = Vec::new();
    for rep in 0..settings.repetitions {
        let rep_ok: Vec<&&CaseRecord> = ok.iter().filter(|r| r.repetition == rep).collect();
        if rep_ok.is_empty() {
            continue;
        }
        per_repetition.push(RepetitionAggregate {
            repetition: rep,
            mape_pct: rep_ok.iter().map(|r| r.ape_pct.unwrap()).sum::<f64>() / rep_ok.len() as f64,
            mean_r: rep_ok.iter().map(|r| r.xcorr_r.unwrap()).sum::<f64>() / rep_ok.len() as f64,
        });
    }
    let cov_or_zero = |values: &[f64]| -> f64 {
        if values.len() >= 2 {
            coefficient_of_variation(values).unwrap_or(0.0)
        } else {
            0.0
        }
    };
    let mape_cov_pct = cov_or_zero(&per_repetition.iter().map(|r| r.mape_pct).collect::<Vec<_>>());
    let r_cov_pct = cov_or_zero(&per_repetition.iter().map(|r| r.mean_r).collect::<Vec<_>>());

    let (pass, ci95_upper_pct) = if mape_res.ape_pct.len() >= 10 {
        let cls = classify_accuracy(&mape_res.ape_pct, derive_seed_str(settings.seed, "bootstrap"))?;
        (cls.pass, cls.ci95_upper_pct)
    } else {
        // Too few measurements for the bootstrap; fall back to the plain mean.
        (mape_res.mape_pct < 10.0, mape_res.mape_pct)
    };

    let result = RunResult {
        suite: suite.name.clone(),
        config_digest: config_digest(suite, settings)?,
        repetitions: settings.repetitions,
        videos: if settings.materialize_dir.is_some() {
            "materialized".to_string()
        } else {
            "in-memory".to_string()
        },
        cases: records,
        per_repetition,
        aggregates: Aggregates {
            mape_pct: mape_res.mape_pct,
            mape_cov_pct,
            mean_r,
            r_cov_pct,
            ci95_upper_pct,
        },
        pass,
    };
    verify_aggregates(&result)?;
    Ok(result)
}

/// Recompute the aggregates from the per-case records and check they match
/// the stored values to 1e-12 relative.
pub fn verify_aggregates(result: &RunResult) -> Result<()> {
    let ok: Vec<&CaseRecord> = result.cases.iter().filter(|r| r.status == "ok").collect();
    if ok.is_empty() {
        return Err(Error::Run("no successful cases to verify".into()));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mape_pct = ok.iter().map(|r| r.ape_pct.unwrap()).sum::<f64>() / ok.len() as f64;
    let mean_r = ok.iter().map(|r| r.xcorr_r.unwrap()).sum::<f64>() / ok.len() as f64;
    if !close(mape_pct, result.aggregates.mape_pct) || !close(mean_r, result.aggregates.mean_r) {
        return Err(Error::Run(format!(
            "stored aggregates (mape {}, r {}) disagree with recomputed ({mape_pct}, {mean_r})",
            result.aggregates.mape_pct, result.aggregates.mean_r
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Write a run result as a JSON report or a flat per-case CSV table.
pub fn generate_report(result: &RunResult, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    match format {
        ReportFormat::Json => {
            std::fs::write(path, serde_json::to_string_pretty(result)?)?;
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "id,repetition,expected_bpm,measured_bpm,ape_pct,xcorr_r,lag_s,drop_count,status\n",
            );
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in &result.cases {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.id,
                    r.repetition,
                    r.expected_bpm,
                    opt(r.measured_bpm),
                    opt(r.ape_pct),
                    opt(r.xcorr_r),
                    opt(r.lag_s),
                    r.drop_count.map(|d| d.to_string()).unwrap_or_default(),
                    r.status
                )
                .expect("string write");
            }
            std::fs::write(path, out)?;
        }
    }
    Ok(())
}

/// Read back a JSON report.
pub fn load_report(path: impl AsRef<Path>) -> Result<RunResult> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dut::DropMode;

    #[test]
    fn standard_suite_is_the_cross_product() {
        let suite = build_standard_suite(1);
        assert_eq!(suite.cases.len(), 20);
        let hrs: std::collections::BTreeSet<i64> =
            suite.cases.iter().map(|c| c.expected_bpm as i64).collect();
        assert_eq!(hrs.len(), 5);
        let profiles: std::collections::BTreeSet<&str> =
            suite.cases.iter().map(|c| c.profile.name.as_str()).collect();
        assert_eq!(profiles.len(), 4);
        for &hr in &hrs {
            let count = suite.cases.iter().filter(|c| c.expected_bpm as i64 == hr).count();
            assert_eq!(count, 4);
        }
        suite.validate().unwrap();
    }

    #[test]
    fn standard_suite_deterministic() {
        assert_eq!(build_standard_suite(7), build_standard_suite(7));
    }

    #[test]
    fn zero_repetitions_rejected() {
        let suite = build_standard_suite(1);
        let settings = RunSettings::new(
            DegradationConfig::none(),
            EstimatorConfig::default(),
            0,
            1,
        );
        assert!(matches!(run_suite(&suite, &settings), Err(Error::Config(_))));
    }

    /// Small suite for cheap closed-loop tests.
    fn tiny_suite() -> TestSuite {
        let mut suite = build_standard_suite(5);
        suite.cases.truncate(2);
        for case in &mut suite.cases {
            case.spec = FrameSpec {
                width: 64,
                height: 64,
                fps: 30.0,
            };
        }
        suite.name = "tiny".into();
        suite
    }

    #[test]
    fn tiny_run_closes_the_loop() {
        let suite = tiny_suite();
        let settings = RunSettings::new(
            DegradationConfig::none(),
            EstimatorConfig::default(),
            2,
            3,
        );
        let result = run_suite(&suite, &settings).unwrap();
        assert_eq!(result.cases.len(), 4);
        assert!(result.cases.iter().all(|r| r.status == "ok"));
        assert!(result.aggregates.mape_pct < 2.0, "mape {}", result.aggregates.mape_pct);
        verify_aggregates(&result).unwrap();
    }

    #[test]
    fn streaming_matches_two_step_pipeline() {
        let mapped = MappedSignal {
            targets: (0..20).map(|i| [128.0 + (i % 4) as f64; 3]).collect(),
            fps: 30.0,
        };
        let spec = FrameSpec {
            width: 64,
            height: 64,
            fps: 30.0,
        };
        let streamed = encode_decode_streaming(&mapped, &spec, 2.0, 17).unwrap();
        let clip = encode_video(&mapped, &spec, 2.0, 17).unwrap();
        let two_step = decode_video(&clip).unwrap();
        assert_eq!(streamed, two_step);
    }

    #[test]
    fn per_case_errors_are_recorded_not_fatal() {
        let mut suite = tiny_suite();
        // Second case's waveform file does not exist.
        suite.cases[1].waveform_source = WaveformSource::File {
            path: PathBuf::from("/nonexistent/waveform.csv"),
        };
        suite.cases[1].expected_bpm = 80.0;
        let settings = RunSettings::new(
            DegradationConfig::none(),
            EstimatorConfig::default(),
            1,
            3,
        );
        let result = run_suite(&suite, &settings).unwrap();
        assert_eq!(result.cases.len(), 2);
        assert!(result.cases.iter().any(|r| r.status.starts_with("error:")));
        assert!(result.cases.iter().any(|r| r.status == "ok"));
    }

    #[test]
    fn report_round_trip_and_schema() {
        let suite = tiny_suite();
        let settings = RunSettings::new(
            DegradationConfig {
                drop_mode: DropMode::Uniform { p: 0.05 },
                jitter_std_ms: 1.0,
                sensor_noise_std: 0.01,
                seed: 0,
            },
            EstimatorConfig::default(),
            2,
            9,
        );
        let result = run_suite(&suite, &settings).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("report.json");
        generate_report(&result, ReportFormat::Json, &json_path).unwrap();
        let text = std::fs::read_to_string(&json_path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["suite", "config_digest", "repetitions", "cases", "aggregates", "pass"] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
        let back = load_report(&json_path).unwrap();
        assert_eq!(back, result);
        assert_eq!(back.aggregates.mape_pct.to_bits(), result.aggregates.mape_pct.to_bits());

        let csv_path = dir.path().join("report.csv");
        generate_report(&result, ReportFormat::Csv, &csv_path).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(csv.lines().count(), 1 + result.cases.len());
    }

    #[test]
    fn identical_settings_identical_reports() {
        let suite = tiny_suite();
        let settings = RunSettings::new(
            DegradationConfig::none(),
            EstimatorConfig::default(),
            2,
            11,
        );
        let a = run_suite(&suite, &settings).unwrap();
        let b = run_suite(&suite, &settings).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
