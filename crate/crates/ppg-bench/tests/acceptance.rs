//! End-to-end acceptance gate. Eight criteria, one pass/fail line each, all
//! tolerances pinned below. Criteria 1-3 share one 20-repetition run of the
//! standard suite (400 case-runs) plus a second identical run for the
//! byte-identity check, so this target takes a while on one core.
//!
//! Run just this gate with `cargo test --test acceptance -- --nocapture`.

use std::time::Instant;

use ppg_bench::dut::{decode_video, DegradationConfig, DropMode, RecoveredSignal};
use ppg_bench::encoder::{
    encode_video, map_ppg_to_rgb, ChannelProfile, FrameSpec, DEFAULT_DITHER_SIGMA,
};
use ppg_bench::estimator::{estimate_hr, EstimatorConfig};
use ppg_bench::harness::{
    build_standard_suite, generate_report, run_suite, verify_aggregates, ReportFormat,
    RunResult, RunSettings, TestCase, TestSuite, WaveformSource,
};
use ppg_bench::metrics::{
    classify_accuracy, coefficient_of_variation, frame_rate_stats, mape, pearson,
    AccelTrace, PairedMeasurements,
};
use ppg_bench::waveform::{synthesize_ppg, PpgWaveform, SynthConfig};

const MASTER_SEED: u64 = 20240901;
const REPETITIONS: u32 = 20;

// Criterion 1: closed-loop accuracy.
const MAX_SUITE_MAPE_PCT: f64 = 0.5;
const MIN_HR_PEARSON: f64 = 0.999;
const MAX_RUNTIME_S: f64 = 600.0;
// Criterion 2: waveform fidelity.
const MIN_MEAN_XCORR: f64 = 0.95;
const MIN_FAINT_XCORR: f64 = 0.85;
// Criterion 3: reproducibility.
const MAX_COV_PCT: f64 = 3.0;
// Criterion 4: sub-quantization.
const MIN_DITHERED_R: f64 = 0.95;
const MAX_UNDITHERED_R: f64 = 0.5;
// Criterion 5: frame-drop failure reproduction.
const DROP_BASE_P: f64 = 0.05;
const DROP_SLOPE_PER_BPM: f64 = 0.005;
const MIN_MAPE_RATIO_180_VS_60: f64 = 2.0;
// Criterion 6: accuracy classification.
const PASSING_MAX_APE_PCT: f64 = 5.19;
const FAILING_APE_PCT: f64 = 12.0;
// Criterion 7: motion-artifact diagnosis.
const MOTION_FREQS_HZ: [f64; 3] = [1.0, 1.5, 2.0];
const MOTION_HR_TOL_BPM: f64 = 2.0;
const MOTION_MATCH_TOL_HZ: f64 = 0.1;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn check(&mut self, criterion: &str, pass: bool, detail: String) {
        println!(
            "criterion {criterion}: {} — {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failures.push(format!("{criterion}: {detail}"));
        }
    }
}

fn baseline_settings() -> RunSettings {
    RunSettings::new(
        DegradationConfig::none(),
        EstimatorConfig::default(),
        REPETITIONS,
        MASTER_SEED,
    )
}

fn criterion_1(gate: &mut Gate, result: &RunResult, elapsed_s: f64) {
    let pairs = PairedMeasurements {
        expected_bpm: result.cases.iter().map(|c| c.expected_bpm).collect(),
        measured_bpm: result.cases.iter().map(|c| c.measured_bpm.unwrap()).collect(),
    };
    let m = mape(&pairs).unwrap();
    let r = pearson(&pairs.expected_bpm, &pairs.measured_bpm).unwrap();
    let ok_count = result.cases.iter().filter(|c| c.status == "ok").count();
    gate.check(
        "1 closed-loop accuracy",
        ok_count == result.cases.len()
            && m.mape_pct <= MAX_SUITE_MAPE_PCT
            && r >= MIN_HR_PEARSON
            && elapsed_s <= MAX_RUNTIME_S,
        format!(
            "{} pairs, MAPE {:.4}% (<= {MAX_SUITE_MAPE_PCT}%), r {:.6} (>= {MIN_HR_PEARSON}), {:.0} s (<= {MAX_RUNTIME_S} s)",
            pairs.expected_bpm.len(),
            m.mape_pct,
            r,
            elapsed_s
        ),
    );
}

fn criterion_2(gate: &mut Gate, result: &RunResult) {
    let all: Vec<f64> = result.cases.iter().map(|c| c.xcorr_r.unwrap()).collect();
    let faint: Vec<f64> = result
        .cases
        .iter()
        .filter(|c| c.id.ends_with("-faint"))
        .map(|c| c.xcorr_r.unwrap())
        .collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let faint_mean = faint.iter().sum::<f64>() / faint.len() as f64;
    gate.check(
        "2 waveform fidelity",
        mean >= MIN_MEAN_XCORR && faint_mean >= MIN_FAINT_XCORR,
        format!(
            "mean xcorr r {:.4} (>= {MIN_MEAN_XCORR}), faint-profile mean {:.4} (>= {MIN_FAINT_XCORR})",
            mean, faint_mean
        ),
    );
}

fn criterion_3(gate: &mut Gate, suite: &TestSuite, result: &RunResult) {
    verify_aggregates(result).unwrap();
    let mape_cov = result.aggregates.mape_cov_pct;
    let r_cov = result.aggregates.r_cov_pct;

    // Identical settings, fresh run: the reports must match byte for byte.
    let rerun = run_suite(suite, &baseline_settings()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    generate_report(result, ReportFormat::Json, &a).unwrap();
    generate_report(&rerun, ReportFormat::Json, &b).unwrap();
    let identical = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    gate.check(
        "3 reproducibility",
        mape_cov <= MAX_COV_PCT && r_cov <= MAX_COV_PCT && identical,
        format!(
            "MAPE CoV {:.3}% and r CoV {:.3}% (each <= {MAX_COV_PCT}%), reports byte-identical: {identical}",
            mape_cov, r_cov
        ),
    );
}

fn criterion_4(gate: &mut Gate) {
    // A pure sine whose mapped green swing is one 8-bit step.
    let fs = 100.0;
    let samples: Vec<f64> = (0..1000)
        .map(|i| (2.0 * std::f64::consts::PI * 1.2 * i as f64 / fs).sin())
        .collect();
    let sine = PpgWaveform::new(samples, fs, "sine-1.2hz").unwrap();
    let profile = ChannelProfile {
        mean: [230.0, 150.0, 120.0],
        pulse_amplitude: [0.0, 1.0, 0.0],
        name: "hairline".to_string(),
    };
    let spec = FrameSpec::default();
    let mapped = map_ppg_to_rgb(&sine, &profile, spec.fps).unwrap();
    let target: Vec<f64> = mapped.targets.iter().map(|t| t[1]).collect();

    let r_at = |sigma: f64| {
        let clip = encode_video(&mapped, &spec, sigma, MASTER_SEED).unwrap();
        let decoded = decode_video(&clip).unwrap();
        pearson(&decoded.channel(1), &target).unwrap_or(0.0)
    };
    let dithered = r_at(DEFAULT_DITHER_SIGMA);
    let undithered = r_at(0.0);
    gate.check(
        "4 sub-quantization",
        dithered >= MIN_DITHERED_R && undithered < MAX_UNDITHERED_R,
        format!(
            "1.0-px sine: r {:.4} with sigma=2 (>= {MIN_DITHERED_R}), r {:.4} with sigma=0 (< {MAX_UNDITHERED_R})",
            dithered, undithered
        ),
    );
}

fn criterion_5(gate: &mut Gate, clean_result: &RunResult) {
    let profile = ChannelProfile::standard_profiles()[0].clone();
    let cases = [60.0, 180.0].map(|hr| TestCase {
        id: format!("drop-hr{hr:03.0}"),
        waveform_source: WaveformSource::Synth {
            config: SynthConfig {
                heart_rate_bpm: hr,
                duration_s: 20.0,
                seed: MASTER_SEED,
                ..Default::default()
            },
        },
        profile: profile.clone(),
        spec: FrameSpec::default(),
        expected_bpm: hr,
        duration_s: 20.0,
    });
    let suite = TestSuite {
        name: "hr-dependent-drops".to_string(),
        cases: cases.to_vec(),
    };
    // Naive uniform-resampling estimator: the failure mode under test is a
    // DUT that ignores delivery timestamps.
    let settings = RunSettings {
        degradation: DegradationConfig {
            drop_mode: DropMode::HrDependent {
                base_p: DROP_BASE_P,
                slope_per_bpm: DROP_SLOPE_PER_BPM,
            },
            jitter_std_ms: 0.0,
            sensor_noise_std: 0.0,
            seed: MASTER_SEED,
        },
        estimator: EstimatorConfig {
            timestamp_aware: false,
            ..Default::default()
        },
        ..RunSettings::new(
            DegradationConfig::none(),
            EstimatorConfig::default(),
            5,
            MASTER_SEED,
        )
    };
    let result = run_suite(&suite, &settings).unwrap();
    let mape_at = |hr: f64| {
        let apes: Vec<f64> = result
            .cases
            .iter()
            .filter(|c| c.expected_bpm == hr)
            .map(|c| c.ape_pct.unwrap())
            .collect();
        apes.iter().sum::<f64>() / apes.len() as f64
    };
    let mape_60 = mape_at(60.0);
    let mape_180 = mape_at(180.0);
    let degraded_all_flagged = result
        .cases
        .iter()
        .all(|c| c.drop_count.unwrap_or(0) > 0);
    let clean_none_flagged = clean_result
        .cases
        .iter()
        .all(|c| c.drop_count == Some(0));
    gate.check(
        "5 frame-drop failure",
        mape_180 >= MIN_MAPE_RATIO_180_VS_60 * mape_60
            && degraded_all_flagged
            && clean_none_flagged,
        format!(
            "MAPE {:.2}% @180 bpm vs {:.2}% @60 bpm (ratio {:.1} >= {MIN_MAPE_RATIO_180_VS_60}); drop_count > 0 on all degraded: {degraded_all_flagged}, == 0 on all clean: {clean_none_flagged}",
            mape_180,
            mape_60,
            mape_180 / mape_60
        ),
    );
}

fn criterion_6(gate: &mut Gate) {
    // Spread APEs topping out at the strongest bench result on record.
    let passing: Vec<f64> = (0..20)
        .map(|i| PASSING_MAX_APE_PCT * (i as f64 + 1.0) / 20.0)
        .collect();
    let failing = vec![FAILING_APE_PCT; 20];
    let good = classify_accuracy(&passing, MASTER_SEED).unwrap();
    let bad = classify_accuracy(&failing, MASTER_SEED).unwrap();
    gate.check(
        "6 classification",
        good.pass && !bad.pass,
        format!(
            "APEs <= {PASSING_MAX_APE_PCT}%: pass={} (CI95 upper {:.2}%); constant {FAILING_APE_PCT}%: pass={} (CI95 upper {:.2}%)",
            good.pass, good.ci95_upper_pct, bad.pass, bad.ci95_upper_pct
        ),
    );
}

fn criterion_7(gate: &mut Gate) {
    let hr = 70.0;
    let fps = 30.0;
    let n = 600;
    let base = synthesize_ppg(&SynthConfig {
        heart_rate_bpm: hr,
        duration_s: 20.0,
        sample_rate_hz: fps,
        seed: MASTER_SEED,
        ..Default::default()
    })
    .unwrap();

    let mut all_ok = true;
    let mut details = Vec::new();
    for f in MOTION_FREQS_HZ {
        // Motion swamps the pulse 5:1 in the recovered green channel.
        let signal = RecoveredSignal {
            timestamps_s: (0..n).map(|i| i as f64 / fps).collect(),
            means: (0..n)
                .map(|i| {
                    let t = i as f64 / fps;
                    let motion = 5.0 * (2.0 * std::f64::consts::PI * f * t).sin();
                    [230.0, 150.0 + base.samples[i] + motion, 120.0]
                })
                .collect(),
            nominal_fps: fps,
        };
        let est = estimate_hr(&signal, &EstimatorConfig::default()).unwrap();

        let accel = AccelTrace {
            timestamps_s: (0..2000).map(|i| i as f64 / 100.0).collect(),
            magnitude: (0..2000)
                .map(|i| 9.81 + 2.0 * (2.0 * std::f64::consts::PI * f * i as f64 / 100.0).sin())
                .collect(),
        };
        let dom = ppg_bench::metrics::dominant_frequency(&accel, (0.5, 4.0)).unwrap();

        let hr_locked = (est.bpm - 60.0 * f).abs() <= MOTION_HR_TOL_BPM;
        let matched = dom.matches_bpm(est.bpm, MOTION_MATCH_TOL_HZ);
        all_ok &= hr_locked && matched;
        details.push(format!(
            "{f} Hz -> {:.1} bpm, accel {:.2} Hz, match {matched}",
            est.bpm, dom.freq_hz
        ));
    }
    gate.check("7 motion-artifact diagnosis", all_ok, details.join("; "));
}

fn criterion_8(gate: &mut Gate) {
    // Representative pinned unit examples, re-asserted through the public
    // API; the full set lives in the per-module unit suites.
    let mut ok = true;

    let cov = coefficient_of_variation(&[2.0, 4.0]).unwrap();
    ok &= (cov - 47.14045207910317).abs() < 1e-9;
    ok &= coefficient_of_variation(&[1.0, 1.0, 1.0]).unwrap() == 0.0;
    ok &= coefficient_of_variation(&[1.0, -1.0]).is_err();

    let x = [1.0, 2.0, 4.0, 8.0];
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    ok &= (pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12;
    ok &= (pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12;
    ok &= pearson(&x, &[3.0; 4]).is_err();

    let uniform: Vec<f64> = (0..90).map(|i| i as f64 / 30.0).collect();
    let stats = frame_rate_stats(&uniform, 30.0).unwrap();
    ok &= (stats.mean_fps - 30.0).abs() < 1e-9 && stats.drop_count == 0;
    ok &= frame_rate_stats(&[0.0], 30.0).is_err();

    // sigma = 0 renders the rounded target exactly.
    let flat = PpgWaveform::new(
        (0..60).map(|i| (i as f64 / 10.0).sin()).collect(),
        30.0,
        "t",
    )
    .unwrap();
    let profile = ChannelProfile {
        mean: [100.0, 100.0, 100.0],
        pulse_amplitude: [0.0, 0.0, 0.0],
        name: "flat".to_string(),
    };
    let mapped = map_ppg_to_rgb(&flat, &profile, 30.0).unwrap();
    let clip = encode_video(&mapped, &FrameSpec { width: 64, height: 48, fps: 30.0 }, 0.0, 1).unwrap();
    let decoded = decode_video(&clip).unwrap();
    ok &= decoded.means.iter().all(|m| *m == [100.0, 100.0, 100.0]);

    ok &= run_suite(
        &build_standard_suite(0),
        &RunSettings::new(DegradationConfig::none(), EstimatorConfig::default(), 0, 0),
    )
    .is_err();

    gate.check(
        "8 unit properties",
        ok,
        "pinned CoV/Pearson/frame-rate/exact-render/zero-repetition examples hold".to_string(),
    );
}

#[test]
fn acceptance() {
    let mut gate = Gate { failures: Vec::new() };

    let suite = build_standard_suite(MASTER_SEED);
    let start = Instant::now();
    let result = run_suite(&suite, &baseline_settings()).unwrap();
    let elapsed_s = start.elapsed().as_secs_f64();

    criterion_1(&mut gate, &result, elapsed_s);
    criterion_2(&mut gate, &result);
    criterion_3(&mut gate, &suite, &result);
    criterion_4(&mut gate);
    criterion_5(&mut gate, &result);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
