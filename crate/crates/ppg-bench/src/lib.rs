//! Bench-testing toolkit for smartphone apps that measure heart rate from
//! finger-over-camera video.
//!
//! The pipeline mirrors a desk-scale functional tester:
//!
//! 1. [`waveform`] synthesizes or loads a PPG waveform (controlled HR,
//!    respiratory modulation, drift, artifacts, SNR-targeted noise).
//! 2. [`encoder`] maps the waveform to per-frame RGB targets and renders
//!    dithered 8-bit frames whose spatial mean carries the target at
//!    sub-quantization precision.
//! 3. [`dut`] emulates the device under test: decodes clips to channel-mean
//!    time series and injects frame drops, timing jitter, and sensor noise.
//! 4. [`estimator`] recovers a heart rate (spectral or inter-beat-interval).
//! 5. [`metrics`] scores accuracy (MAPE, Pearson, lag-aligned
//!    cross-correlation, CoV, the <10% consumer-monitor criterion) and
//!    diagnoses failures (frame-rate statistics, accelerometer dominant
//!    frequency).
//! 6. [`harness`] runs whole suites repeatedly and emits machine-readable
//!    reports.
//!
//! Everything is deterministic: a master seed plus structural counters
//! (frame index, repetition, case id) derive every random stream, so results
//! are identical at any degree of parallelism. See the `examples/` directory
//! for one runnable example per capability.

pub mod container;
pub mod dither;
pub mod dut;
pub mod encoder;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod spectral;
pub mod waveform;

pub use error::{Error, Result};
