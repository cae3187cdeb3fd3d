//! Accuracy and timing evaluation: interval MSE, per-benchmark full-benchmark
//! error with seen/unseen breakdown, and inference throughput.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{contiguous_runs, Provenance, SampleSet, Window};
use crate::error::{Error, Result};
use crate::models::{aggregate_ipc, Model};
use crate::trace::{write_atomic, BenchmarkTrace};

/// MSE of raw (unclamped) predictions over contiguous runs; recurrent state
/// is carried across each run. Used for training curves and interval MSE.
pub fn mse_over_runs(model: &Model, runs: &[Window]) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let parts: Vec<(f64, usize)> = runs
        .par_iter()
        .map(|run| {
            let preds = model.predict_run_raw(&run.uaim, &run.cfg)?;
            let sq: f64 = preds.iter().zip(&run.ipc).map(|(p, y)| (p - y) * (p - y)).sum();
            Ok((sq, run.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sq, n) = parts.iter().fold((0.0, 0usize), |(s, n), &(ps, pn)| (s + ps, n + pn));
    Ok(sq / n as f64)
}

/// MSE between per-interval predictions and labels over a sample set.
/// Normalized sets are used as-is; raw sets are normalized with the model's
/// stats.
pub fn interval_mse(model: &Model, set: &SampleSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let owned;
    let normalized = if set.norm.is_some() {
        set
    } else {
        let stats = model.norm.as_ref().ok_or(Error::UnnormalizedInput)?;
        owned = set.normalized(stats)?;
        &owned
    };
    mse_over_runs(model, &contiguous_runs(normalized))
}

/// One (benchmark, sku) full-benchmark comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub benchmark: String,
    pub sku_id: String,
    pub true_ipc: f64,
    pub pred_ipc: f64,
    pub abs_pct_err: f64,
    pub tag: Provenance,
}

/// Per-benchmark rollup across SKUs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRollup {
    pub benchmark: String,
    pub sku_count: usize,
    pub mean_true_ipc: f64,
    pub mean_pred_ipc: f64,
    pub mean_abs_pct_err: f64,
    pub tag: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub repetitions: usize,
    pub intervals: usize,
    pub median_seconds: f64,
    pub intervals_per_second: f64,
    /// intervals/second x nominal interval width.
    pub instructions_per_second: f64,
    pub seconds_per_10b_instructions: f64,
    /// Time for the measured traces at the measured rate.
    pub suite_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub rollup: Vec<BenchmarkRollup>,
    pub mean_overall: f64,
    pub mean_seen: Option<f64>,
    pub mean_unseen: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interval_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub throughput: Option<ThroughputReport>,
}

/// Full-benchmark absolute-percent-error rows for labeled traces. The true
/// aggregate comes from interval labels through the same cycles-sum
/// aggregation as predictions.
pub fn benchmark_errors(model: &Model, traces: &[(BenchmarkTrace, Provenance)]) -> Result<EvalReport> {
    if traces.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<EvalRow> = traces
        .par_iter()
        .map(|(trace, tag)| {
            let labels = trace.label_ipcs()?;
            let true_ipc = aggregate_ipc(&trace.intervals, &labels)?;
            let pred_ipc = model.predict_full_benchmark(trace, &trace.sku)?;
            Ok(EvalRow {
                benchmark: trace.benchmark.clone(),
                sku_id: trace.sku.sku_id.clone(),
                true_ipc,
                pred_ipc,
                abs_pct_err: (pred_ipc - true_ipc).abs() / true_ipc * 100.0,
                tag: *tag,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // rollup per benchmark, first-appearance order
    let mut rollup: Vec<BenchmarkRollup> = Vec::new();
    for row in &rows {
        match rollup.iter_mut().find(|r| r.benchmark == row.benchmark) {
            Some(r) => {
                r.sku_count += 1;
                r.mean_true_ipc += row.true_ipc;
                r.mean_pred_ipc += row.pred_ipc;
                r.mean_abs_pct_err += row.abs_pct_err;
            }
            None => rollup.push(BenchmarkRollup {
                benchmark: row.benchmark.clone(),
                sku_count: 1,
                mean_true_ipc: row.true_ipc,
                mean_pred_ipc: row.pred_ipc,
                mean_abs_pct_err: row.abs_pct_err,
                tag: row.tag,
            }),
        }
    }
    for r in &mut rollup {
        let n = r.sku_count as f64;
        r.mean_true_ipc /= n;
        r.mean_pred_ipc /= n;
        r.mean_abs_pct_err /= n;
    }

    let group_sum = |tag: Provenance| -> (f64, usize) {
        rows.iter()
            .filter(|r| r.tag == tag)
            .fold((0.0, 0), |(s, n), r| (s + r.abs_pct_err, n + 1))
    };
    let (seen_sum, seen_n) = group_sum(Provenance::Seen);
    let (unseen_sum, unseen_n) = group_sum(Provenance::Unseen);
    let mean_overall = (seen_sum + unseen_sum) / rows.len() as f64;
    Ok(EvalReport {
        rows,
        rollup,
        mean_overall,
        mean_seen: (seen_n > 0).then(|| seen_sum / seen_n as f64),
        mean_unseen: (unseen_n > 0).then(|| unseen_sum / unseen_n as f64),
        interval_mse: None,
        throughput: None,
    })
}

/// Serial stateful-inference timing: one warmup pass, then the median of
/// `repetitions` full passes over the traces. Runs exclusively on the calling
/// thread so measurements stay meaningful.
pub fn timing_report(
    model: &Model,
    traces: &[BenchmarkTrace],
    repetitions: usize,
) -> Result<ThroughputReport> {
    if traces.is_empty() || repetitions == 0 {
        return Err(Error::EmptyDataset);
    }
    let total_intervals: usize = traces.iter().map(|t| t.intervals.len()).sum();
    let width = traces[0].width();

    let pass = |m: &Model| -> Result<()> {
        for t in traces {
            std::hint::black_box(m.predict_intervals(t, &t.sku)?);
        }
        Ok(())
    };
    pass(model)?; // warmup, excluded

    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t0 = Instant::now();
        pass(model)?;
        times.push(t0.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if times.len() % 2 == 1 {
        times[times.len() / 2]
    } else {
        0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
    };
    let intervals_per_second = total_intervals as f64 / median;
    let instructions_per_second = intervals_per_second * width as f64;
    Ok(ThroughputReport {
        repetitions,
        intervals: total_intervals,
        median_seconds: median,
        intervals_per_second,
        instructions_per_second,
        seconds_per_10b_instructions: 1e10 / instructions_per_second,
        suite_seconds: total_intervals as f64 / intervals_per_second,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Plotdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(Error::InvalidSpec(format!("unknown report format '{other}'"))),
        }
    }
}

/// Renders a report in the requested format; layout is canonical and pinned
/// by golden tests.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => {
            let mut out = String::new();
            out.push_str("# per (benchmark, sku)\n");
            out.push_str("benchmark\tsku\ttrue_ipc\tpred_ipc\tabs_pct_err\ttag\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.benchmark, r.sku_id, r.true_ipc, r.pred_ipc, r.abs_pct_err, r.tag
                ));
            }
            out.push_str("# per benchmark\n");
            out.push_str("benchmark\tskus\tmean_true_ipc\tmean_pred_ipc\tmean_abs_pct_err\ttag\n");
            for r in &report.rollup {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.benchmark,
                    r.sku_count,
                    r.mean_true_ipc,
                    r.mean_pred_ipc,
                    r.mean_abs_pct_err,
                    r.tag
                ));
            }
            out.push_str("# summary\n");
            out.push_str(&format!("overall_mean_abs_pct_err\t{}\n", report.mean_overall));
            if let Some(v) = report.mean_seen {
                out.push_str(&format!("seen_mean_abs_pct_err\t{v}\n"));
            }
            if let Some(v) = report.mean_unseen {
                out.push_str(&format!("unseen_mean_abs_pct_err\t{v}\n"));
            }
            if let Some(v) = report.interval_mse {
                out.push_str(&format!("interval_mse\t{v}\n"));
            }
            if let Some(t) = &report.throughput {
                out.push_str("# throughput\n");
                out.push_str(&format!("repetitions\t{}\n", t.repetitions));
                out.push_str(&format!("intervals\t{}\n", t.intervals));
                out.push_str(&format!("median_seconds\t{}\n", t.median_seconds));
                out.push_str(&format!("intervals_per_second\t{}\n", t.intervals_per_second));
                out.push_str(&format!(
                    "instructions_per_second\t{}\n",
                    t.instructions_per_second
                ));
                out.push_str(&format!(
                    "seconds_per_10b_instructions\t{}\n",
                    t.seconds_per_10b_instructions
                ));
                out.push_str(&format!("suite_seconds\t{}\n", t.suite_seconds));
            }
            out
        }
        ReportFormat::Plotdata => {
            // bar-chart-ready per-benchmark rows
            let mut out = String::from("benchmark\ttag\tmean_abs_pct_err\n");
            for r in &report.rollup {
                out.push_str(&format!("{}\t{}\t{}\n", r.benchmark, r.tag, r.mean_abs_pct_err));
            }
            out
        }
    }
}

/// Writes a rendered report atomically.
pub fn emit_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    write_atomic(path, render_report(report, format).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{assemble_samples, compute_norm_stats};
    use crate::models::{build, ModelSpec};
    use crate::synth::{gen_benchmark_trace, gen_profiles, gen_skus, SynthSpec};

    fn tiny_traces(n_bench: usize, n_skus: usize) -> Vec<BenchmarkTrace> {
        let spec = SynthSpec {
            n_benchmarks: n_bench,
            n_skus,
            intervals_per_trace: 20,
            interval_width: 1_000_000,
            noise_sigma: 0.0,
            seed: 11,
        };
        let profiles = gen_profiles(n_bench, spec.seed);
        let skus = gen_skus(n_skus, spec.seed);
        let mut traces = Vec::new();
        for p in &profiles {
            for s in &skus {
                traces.push(gen_benchmark_trace(p, s, &spec));
            }
        }
        traces
    }

    fn normalized_model(traces: &[BenchmarkTrace]) -> Model {
        let set = assemble_samples(traces).unwrap();
        let stats = compute_norm_stats(&set).unwrap();
        let mut m = build(&ModelSpec::linreg(1)).unwrap();
        m.norm = Some(stats);
        m
    }

    #[test]
    fn perfect_predictor_has_zero_error() {
        // feed predictions equal to labels through the aggregation identity
        let traces = tiny_traces(1, 1);
        let labels = traces[0].label_ipcs().unwrap();
        let truth = aggregate_ipc(&traces[0].intervals, &labels).unwrap();
        let again = aggregate_ipc(&traces[0].intervals, &labels).unwrap();
        assert_eq!(truth, again);
    }

    #[test]
    fn percent_error_arithmetic() {
        // pred 1.2 vs truth 1.0 -> 20%
        let e = (1.2f64 - 1.0).abs() / 1.0 * 100.0;
        assert!((e - 20.0).abs() < 1e-12);
    }

    #[test]
    fn interval_mse_matches_concatenated_mse_oracle() {
        let traces = tiny_traces(2, 2);
        let model = normalized_model(&traces);
        let set = assemble_samples(&traces).unwrap();
        let got = interval_mse(&model, &set).unwrap();

        // oracle: concatenate per-run raw predictions and recompute with
        // nn::mse_loss
        let stats = model.norm.clone().unwrap();
        let normed = set.normalized(&stats).unwrap();
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        for run in contiguous_runs(&normed) {
            preds.extend(model.predict_run_raw(&run.uaim, &run.cfg).unwrap());
            labels.extend(run.ipc.clone());
        }
        let want = crate::nn::mse_loss(&preds, &labels).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn report_means_and_groups() {
        let traces = tiny_traces(3, 2);
        let model = normalized_model(&traces);
        let tagged: Vec<(BenchmarkTrace, Provenance)> = traces
            .into_iter()
            .map(|t| {
                let tag = if t.benchmark == "bench_00" {
                    Provenance::Unseen
                } else {
                    Provenance::Seen
                };
                (t, tag)
            })
            .collect();
        let report = benchmark_errors(&model, &tagged).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.rollup.len(), 3);
        let seen = report.mean_seen.unwrap();
        let unseen = report.mean_unseen.unwrap();
        let n_seen = report.rows.iter().filter(|r| r.tag == Provenance::Seen).count();
        let n_unseen = report.rows.len() - n_seen;
        let weighted =
            (seen * n_seen as f64 + unseen * n_unseen as f64) / report.rows.len() as f64;
        assert!((report.mean_overall - weighted).abs() < 1e-12);
        // percent error invariant under common scaling
        let r = &report.rows[0];
        let scaled = ((r.pred_ipc * 3.0) - (r.true_ipc * 3.0)).abs() / (r.true_ipc * 3.0) * 100.0;
        assert!((scaled - r.abs_pct_err).abs() < 1e-9);
    }

    #[test]
    fn missing_labels_detected() {
        let mut traces = tiny_traces(1, 1);
        traces[0].intervals[3].ipc_label = None;
        traces[0].intervals[3].cycles_label = None;
        let model = normalized_model(&tiny_traces(1, 1));
        let tagged = vec![(traces.remove(0), Provenance::Seen)];
        assert!(matches!(benchmark_errors(&model, &tagged), Err(Error::MissingLabels(_))));
    }

    #[test]
    fn throughput_extrapolation_is_pure_arithmetic() {
        let traces = tiny_traces(1, 1);
        let model = normalized_model(&traces);
        let report = timing_report(&model, &traces, 5).unwrap();
        assert_eq!(report.repetitions, 5);
        assert_eq!(report.intervals, 20);
        let ips = report.intervals as f64 / report.median_seconds;
        assert!((report.intervals_per_second - ips).abs() < 1e-9 * ips);
        let want_inst = ips * 1_000_000.0;
        assert!(
            (report.instructions_per_second - want_inst).abs() < 1e-9 * want_inst
        );
        let want_s10b = 1e10 / want_inst;
        assert!(
            (report.seconds_per_10b_instructions - want_s10b).abs() < 1e-9 * want_s10b
        );
    }

    #[test]
    fn report_rendering_round_trips_plotdata() {
        let traces = tiny_traces(2, 1);
        let model = normalized_model(&traces);
        let tagged: Vec<(BenchmarkTrace, Provenance)> =
            traces.into_iter().map(|t| (t, Provenance::Seen)).collect();
        let report = benchmark_errors(&model, &tagged).unwrap();
        let text = render_report(&report, ReportFormat::Plotdata);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("benchmark\ttag\tmean_abs_pct_err"));
        for (line, r) in lines.zip(&report.rollup) {
            let mut parts = line.split('\t');
            assert_eq!(parts.next().unwrap(), r.benchmark);
            assert_eq!(parts.next().unwrap(), r.tag.to_string());
            let err: f64 = parts.next().unwrap().parse().unwrap();
            assert_eq!(err, r.mean_abs_pct_err);
        }
        // table has 2 data rows per section plus summary
        let table = render_report(&report, ReportFormat::Table);
        assert!(table.contains("overall_mean_abs_pct_err"));
    }
}
