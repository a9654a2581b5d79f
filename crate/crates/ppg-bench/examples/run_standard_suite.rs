//! Run the standard 20-case suite (5 heart rates x 4 signal strengths)
//! end to end and write a JSON report. Takes a minute or two: every case
//! renders and decodes 600 dithered 320x240 frames.
//!
//! Run: `cargo run --release --example run_standard_suite`

use ppg_bench::dut::DegradationConfig;
use ppg_bench::estimator::EstimatorConfig;
use ppg_bench::harness::{
    build_standard_suite, generate_report, run_suite, ReportFormat, RunSettings,
};

fn main() -> ppg_bench::Result<()> {
    let suite = build_standard_suite(0);
    let settings = RunSettings::new(DegradationConfig::none(), EstimatorConfig::default(), 1, 0);
    let result = run_suite(&suite, &settings)?;

    for record in &result.cases {
        println!(
            "{:<16} expected {:>5.1} bpm, measured {:>7.2?} bpm, APE {:.3?}%  [{}]",
            record.id, record.expected_bpm, record.measured_bpm, record.ape_pct, record.status
        );
    }
    println!(
        "\nMAPE {:.4}%  CI95-upper {:.4}%  mean xcorr r {:.4}  pass={}",
        result.aggregates.mape_pct,
        result.aggregates.ci95_upper_pct,
        result.aggregates.mean_r,
        result.pass
    );
    generate_report(&result, ReportFormat::Json, "standard_suite_report.json")?;
    println!("wrote standard_suite_report.json");
    Ok(())
}
