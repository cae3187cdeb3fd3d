//! Trace-driven CPU performance projection.
//!
//! The pipeline: microarchitecture-independent counter traces (uAIMs) plus a
//! hardware configuration go in; per-interval and full-benchmark IPC
//! predictions come out. Models range from linear regression to a
//! hierarchical LSTM; a synthetic generator with a sequential ground-truth
//! oracle stands in for proprietary trace data.

pub mod dataset;
pub mod error;
pub mod evalx;
pub mod models;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod trace;
pub mod train;

pub use dataset::{NormStats, Provenance, Sample, SampleSet, Window};
pub use error::{Error, Result};
pub use evalx::{EvalReport, ReportFormat, ThroughputReport};
pub use models::{Model, ModelKind, ModelSpec};
pub use synth::{BenchmarkProfile, SynthSpec};
pub use trace::{
    BenchmarkTrace, CounterSnapshot, FeatureSchema, HardwareConfig, IntervalRecord, TraceFile,
};
pub use train::{RunRecord, SweepGrid, TrainConfig};
