//! Sample assembly, z-score normalization, train/test splits, and window
//! construction for sequence training.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::trace::BenchmarkTrace;

/// Whether a benchmark appeared in the training partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seen,
    Unseen,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Seen => "seen",
            Provenance::Unseen => "unseen",
        })
    }
}

/// One labeled datapoint: an interval's feature vector plus its config.
#[derive(Debug, Clone)]
pub struct Sample {
    pub benchmark: String,
    pub sku_id: String,
    pub interval_index: usize,
    pub uaim: Vec<f64>,
    pub cfg: Vec<f64>,
    pub ipc: f64,
    pub tag: Provenance,
}

/// A set of samples; `norm` is present once the vectors are z-scored.
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub norm: Option<NormStats>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct benchmark names in first-appearance order.
    pub fn benchmarks(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.samples {
            if seen.insert(s.benchmark.as_str()) {
                out.push(s.benchmark.clone());
            }
        }
        out
    }

    /// Applies `stats` to every sample vector, returning a normalized copy.
    pub fn normalized(&self, stats: &NormStats) -> Result<SampleSet> {
        if self.norm.is_some() {
            return Err(Error::InvalidSpec("sample set is already normalized".into()));
        }
        let mut samples = self.samples.clone();
        for s in &mut samples {
            s.uaim = normalize(&s.uaim, &stats.uaim_mean, &stats.uaim_std)?;
            s.cfg = normalize(&s.cfg, &stats.cfg_mean, &stats.cfg_std)?;
        }
        Ok(SampleSet { samples, norm: Some(stats.clone()) })
    }
}

/// Builds the flat sample table from labeled traces. Every interval must
/// carry an IPC label; (benchmark, sku, interval) triples must be unique.
pub fn assemble_samples(traces: &[BenchmarkTrace]) -> Result<SampleSet> {
    let mut samples = Vec::new();
    let mut keys: HashSet<(String, String, usize)> = HashSet::new();
    for trace in traces {
        let cfg = trace.sku.feature_vec().to_vec();
        for (k, iv) in trace.intervals.iter().enumerate() {
            let ipc = iv.ipc_label.ok_or_else(|| {
                Error::MissingLabels(format!("trace {} sku {} interval {k}", trace.benchmark, trace.sku.sku_id))
            })?;
            if !keys.insert((trace.benchmark.clone(), trace.sku.sku_id.clone(), k)) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate sample ({}, {}, {k})",
                    trace.benchmark, trace.sku.sku_id
                )));
            }
            samples.push(Sample {
                benchmark: trace.benchmark.clone(),
                sku_id: trace.sku.sku_id.clone(),
                interval_index: k,
                uaim: iv.uaim_delta.clone(),
                cfg: cfg.clone(),
                ipc,
                tag: Provenance::Seen,
            });
        }
    }
    Ok(SampleSet { samples, norm: None })
}

/// Per-feature mean/std over the training set, used to z-score inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub uaim_mean: Vec<f64>,
    pub uaim_std: Vec<f64>,
    pub cfg_mean: Vec<f64>,
    pub cfg_std: Vec<f64>,
    pub computed_on: usize,
}

// Population std below this is treated as a constant feature.
const STD_FLOOR_EPS: f64 = 1e-12;

fn column_stats(n: usize, dim: usize, get: impl Fn(usize, usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    // Two-pass mean/population-variance; the test oracle is a single-pass
    // (Welford) reimplementation.
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += get(i, j);
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut var = vec![0.0; dim];
    for i in 0..n {
        for (j, v) in var.iter_mut().enumerate() {
            let d = get(i, j) - mean[j];
            *v += d * d;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s > STD_FLOOR_EPS {
                s
            } else {
                1.0 // constant feature
            }
        })
        .collect();
    (mean, std)
}

/// Computes normalization statistics from training samples only.
pub fn compute_norm_stats(train: &SampleSet) -> Result<NormStats> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.len();
    let uaim_dim = train.samples[0].uaim.len();
    let cfg_dim = train.samples[0].cfg.len();
    let (uaim_mean, uaim_std) = column_stats(n, uaim_dim, |i, j| train.samples[i].uaim[j]);
    let (cfg_mean, cfg_std) = column_stats(n, cfg_dim, |i, j| train.samples[i].cfg[j]);
    Ok(NormStats { uaim_mean, uaim_std, cfg_mean, cfg_std, computed_on: n })
}

/// z-scores a vector: out[i] = (v[i] - mean[i]) / std[i].
pub fn normalize(v: &[f64], mean: &[f64], std: &[f64]) -> Result<Vec<f64>> {
    if v.len() != mean.len() || v.len() != std.len() {
        return Err(Error::SchemaMismatch(format!(
            "normalize: vector {} vs stats {}/{}",
            v.len(),
            mean.len(),
            std.len()
        )));
    }
    Ok(v.iter().zip(mean).zip(std).map(|((x, m), s)| (x - m) / s).collect())
}

/// Inverse of [`normalize`].
pub fn denormalize(v: &[f64], mean: &[f64], std: &[f64]) -> Result<Vec<f64>> {
    if v.len() != mean.len() || v.len() != std.len() {
        return Err(Error::SchemaMismatch(format!(
            "denormalize: vector {} vs stats {}/{}",
            v.len(),
            mean.len(),
            std.len()
        )));
    }
    Ok(v.iter().zip(mean).zip(std).map(|((x, m), s)| x * s + m).collect())
}

fn partition_by_indices(set: &SampleSet, pick: &[bool]) -> (SampleSet, SampleSet) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (s, &p) in set.samples.iter().zip(pick) {
        if p {
            a.push(s.clone());
        } else {
            b.push(s.clone());
        }
    }
    (SampleSet { samples: a, norm: set.norm.clone() }, SampleSet { samples: b, norm: set.norm.clone() })
}

/// Random per-sample split. Train size is `round(ratio * n)` clamped so both
/// partitions are non-empty; deterministic for a fixed seed; original sample
/// order is preserved inside each partition.
pub fn split_random(set: &SampleSet, ratio: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if set.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidSpec(format!("split ratio {ratio} not in (0, 1)")));
    }
    let n = set.len();
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &["split", "random"]));
    let mut pick = vec![false; n];
    for &i in order.iter().take(n_train) {
        pick[i] = true;
    }
    Ok(partition_by_indices(set, &pick))
}

/// Random split at whole-(benchmark, sku) trace granularity. Keeps interval
/// sequences contiguous, which recurrent models need; see `split_random` for
/// the per-sample variant.
pub fn split_random_by_trace(set: &SampleSet, ratio: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidSpec(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for s in &set.samples {
        let key = (s.benchmark.clone(), s.sku_id.clone());
        if seen.insert(key.clone()) {
            keys.push(key);
        }
    }
    if keys.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    keys.sort();
    let n_train = ((ratio * keys.len() as f64).round() as usize).clamp(1, keys.len() - 1);
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.shuffle(&mut rng_for(seed, &["split", "by-trace"]));
    let train_keys: HashSet<&(String, String)> =
        order.iter().take(n_train).map(|&i| &keys[i]).collect();
    let pick: Vec<bool> = set
        .samples
        .iter()
        .map(|s| train_keys.contains(&(s.benchmark.clone(), s.sku_id.clone())))
        .collect();
    Ok(partition_by_indices(set, &pick))
}

/// Leave-benchmark-out split: the held-out benchmarks' samples (every SKU)
/// become the test set, tagged unseen. Name matching is case-insensitive.
pub fn split_leave_benchmarks_out(
    set: &SampleSet,
    holdout: &[String],
) -> Result<(SampleSet, SampleSet)> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let present: HashSet<String> =
        set.samples.iter().map(|s| s.benchmark.to_lowercase()).collect();
    let mut holdout_lc = HashSet::new();
    for name in holdout {
        let lc = name.to_lowercase();
        if !present.contains(&lc) {
            return Err(Error::UnknownBenchmark(name.clone()));
        }
        holdout_lc.insert(lc);
    }
    let pick: Vec<bool> = set
        .samples
        .iter()
        .map(|s| !holdout_lc.contains(&s.benchmark.to_lowercase()))
        .collect();
    let (mut train, mut test) = partition_by_indices(set, &pick);
    for s in &mut train.samples {
        s.tag = Provenance::Seen;
    }
    for s in &mut test.samples {
        s.tag = Provenance::Unseen;
    }
    Ok((train, test))
}

/// A contiguous run of intervals from one (benchmark, sku) trace.
#[derive(Debug, Clone)]
pub struct Window {
    pub benchmark: String,
    pub sku_id: String,
    /// interval_index of the first step.
    pub start_index: usize,
    pub uaim: Vec<Vec<f64>>,
    pub cfg: Vec<f64>,
    pub ipc: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.ipc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ipc.is_empty()
    }
}

/// Groups samples by (benchmark, sku) and splits each group into maximal runs
/// of consecutive interval indices, sorted for determinism.
pub fn contiguous_runs(set: &SampleSet) -> Vec<Window> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Sample>> = BTreeMap::new();
    for s in &set.samples {
        groups.entry((s.benchmark.as_str(), s.sku_id.as_str())).or_default().push(s);
    }
    let mut runs = Vec::new();
    for ((bench, sku), mut members) in groups {
        members.sort_by_key(|s| s.interval_index);
        // the config vector is a per-(benchmark, sku) constant
        debug_assert!(
            members.windows(2).all(|w| w[0].cfg == w[1].cfg),
            "samples of ({bench}, {sku}) disagree on the config vector"
        );
        let mut start = 0usize;
        while start < members.len() {
            let mut end = start + 1;
            while end < members.len()
                && members[end].interval_index == members[end - 1].interval_index + 1
            {
                end += 1;
            }
            let chunk = &members[start..end];
            runs.push(Window {
                benchmark: bench.to_string(),
                sku_id: sku.to_string(),
                start_index: chunk[0].interval_index,
                uaim: chunk.iter().map(|s| s.uaim.clone()).collect(),
                cfg: chunk[0].cfg.clone(),
                ipc: chunk.iter().map(|s| s.ipc).collect(),
            });
            start = end;
        }
    }
    runs
}

/// Cuts contiguous runs into training windows of `window` steps taken every
/// `stride` steps. A short tail window is kept iff its length is at least
/// half the window size (2*len >= window); windows never cross trace
/// boundaries.
pub fn make_windows(set: &SampleSet, window: usize, stride: usize) -> Result<Vec<Window>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidSpec("window and stride must be >= 1".into()));
    }
    let mut out = Vec::new();
    for run in contiguous_runs(set) {
        let n = run.len();
        let mut start = 0usize;
        while start < n {
            let end = (start + window).min(n);
            let len = end - start;
            if len == window || 2 * len >= window {
                out.push(Window {
                    benchmark: run.benchmark.clone(),
                    sku_id: run.sku_id.clone(),
                    start_index: run.start_index + start,
                    uaim: run.uaim[start..end].to_vec(),
                    cfg: run.cfg.clone(),
                    ipc: run.ipc[start..end].to_vec(),
                });
            }
            start += stride;
        }
    }
    Ok(out)
}

/// Per-benchmark partition assignment emitted beside every split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format: String,
    pub version: u32,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub holdout: Vec<String>,
    pub assignments: Vec<SplitAssignment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub benchmark: String,
    pub train_samples: usize,
    pub test_samples: usize,
}

impl SplitManifest {
    pub fn new(
        mode: &str,
        ratio: Option<f64>,
        seed: Option<u64>,
        holdout: &[String],
        train: &SampleSet,
        test: &SampleSet,
    ) -> Self {
        let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for s in &train.samples {
            counts.entry(s.benchmark.clone()).or_default().0 += 1;
        }
        for s in &test.samples {
            counts.entry(s.benchmark.clone()).or_default().1 += 1;
        }
        SplitManifest {
            format: "pai-split".into(),
            version: 1,
            mode: mode.into(),
            ratio,
            seed,
            holdout: holdout.to_vec(),
            assignments: counts
                .into_iter()
                .map(|(benchmark, (tr, te))| SplitAssignment {
                    benchmark,
                    train_samples: tr,
                    test_samples: te,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        crate::trace::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ParseError { line: 0, reason: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(bench: &str, sku: &str, idx: usize, ipc: f64) -> Sample {
        Sample {
            benchmark: bench.into(),
            sku_id: sku.into(),
            interval_index: idx,
            uaim: vec![idx as f64, 1.0],
            cfg: vec![1.0],
            ipc,
            tag: Provenance::Seen,
        }
    }

    fn set(samples: Vec<Sample>) -> SampleSet {
        SampleSet { samples, norm: None }
    }

    #[test]
    fn norm_stats_definition() {
        let s = set(vec![sample("b", "s", 0, 1.0), sample("b", "s", 1, 1.0), sample("b", "s", 2, 1.0)]);
        // uaim column 0 is [0, 1, 2]; column 1 is constant 1.
        let stats = compute_norm_stats(&s).unwrap();
        assert!((stats.uaim_mean[0] - 1.0).abs() < 1e-15);
        assert!((stats.uaim_std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(stats.uaim_std[1], 1.0); // constant feature floored
        assert_eq!(stats.computed_on, 3);
    }

    #[test]
    fn norm_stats_example_values() {
        // feature values [1,2,3] -> mean 2, population std sqrt(2/3) ~ 0.816497
        let mut s = set(vec![sample("b", "s", 0, 1.0), sample("b", "s", 1, 1.0), sample("b", "s", 2, 1.0)]);
        for (i, v) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            s.samples[i].uaim = vec![v];
        }
        let stats = compute_norm_stats(&s).unwrap();
        assert!((stats.uaim_mean[0] - 2.0).abs() < 1e-15);
        assert!((stats.uaim_std[0] - 0.816_496_580_927_726).abs() < 1e-12);
    }

    #[test]
    fn normalize_basics() {
        assert_eq!(normalize(&[3.0], &[1.0], &[2.0]).unwrap(), vec![1.0]);
        let v = vec![5.0, -2.0];
        let out = normalize(&v, &v, &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        assert!(normalize(&[1.0], &[1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn split_random_contract() {
        let samples: Vec<Sample> = (0..10).map(|i| sample("b", "s", i, 1.0)).collect();
        let s = set(samples);
        let (tr, te) = split_random(&s, 0.8, 42).unwrap();
        assert_eq!(tr.len(), 8);
        assert_eq!(te.len(), 2);
        let (tr2, te2) = split_random(&s, 0.8, 42).unwrap();
        let key = |s: &Sample| (s.benchmark.clone(), s.sku_id.clone(), s.interval_index);
        assert_eq!(tr.samples.iter().map(key).collect::<Vec<_>>(), tr2.samples.iter().map(key).collect::<Vec<_>>());
        assert_eq!(te.samples.iter().map(key).collect::<Vec<_>>(), te2.samples.iter().map(key).collect::<Vec<_>>());
        // disjoint cover
        let mut all: Vec<usize> = tr.samples.iter().chain(&te.samples).map(|s| s.interval_index).collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_leave_out_filters_all_skus() {
        let mut samples = Vec::new();
        for bench in ["b1", "b2"] {
            for sku in ["s1", "s2"] {
                for i in 0..3 {
                    samples.push(sample(bench, sku, i, 1.0));
                }
            }
        }
        let s = set(samples);
        let (tr, te) = split_leave_benchmarks_out(&s, &["B1".to_string()]).unwrap();
        assert_eq!(te.len(), 6);
        assert!(te.samples.iter().all(|x| x.benchmark == "b1" && x.tag == Provenance::Unseen));
        assert!(tr.samples.iter().all(|x| x.benchmark == "b2" && x.tag == Provenance::Seen));
        assert!(matches!(
            split_leave_benchmarks_out(&s, &["nope".to_string()]),
            Err(Error::UnknownBenchmark(_))
        ));
    }

    #[test]
    fn windows_tail_rule() {
        // 5-interval trace, W=2, stride=2: [0..1], [2..3], and the 1-interval
        // tail is kept (2*1 >= 2 sits exactly on the threshold).
        let samples: Vec<Sample> = (0..5).map(|i| sample("b", "s", i, 1.0)).collect();
        let w = make_windows(&set(samples), 2, 2).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].len(), 2);
        assert_eq!(w[1].len(), 2);
        assert_eq!(w[2].len(), 1);
        assert_eq!(w[2].start_index, 4);
    }

    #[test]
    fn windows_w1_is_per_interval() {
        let samples: Vec<Sample> = (0..4).map(|i| sample("b", "s", i, 1.0)).collect();
        let w = make_windows(&set(samples), 1, 1).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|x| x.len() == 1));
    }

    #[test]
    fn windows_do_not_cross_traces() {
        let mut samples: Vec<Sample> = (0..3).map(|i| sample("a", "s", i, 1.0)).collect();
        samples.extend((0..3).map(|i| sample("b", "s", i, 1.0)));
        let w = make_windows(&set(samples), 4, 4).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|x| x.len() == 3));
        assert_ne!(w[0].benchmark, w[1].benchmark);
    }

    #[test]
    fn windows_respect_index_gaps() {
        // indices 0,1,2,5,6 -> runs [0..2] and [5..6]
        let samples: Vec<Sample> =
            [0, 1, 2, 5, 6].into_iter().map(|i| sample("b", "s", i, 1.0)).collect();
        let runs = contiguous_runs(&set(samples));
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].len(), 3);
        assert_eq!(runs[1].len(), 2);
        assert_eq!(runs[1].start_index, 5);
    }

    #[test]
    fn leave_out_name_audit() {
        let mut samples = Vec::new();
        for bench in ["alpha", "beta", "gamma"] {
            for i in 0..4 {
                samples.push(sample(bench, "s", i, 1.0));
            }
        }
        let s = set(samples);
        let (tr, _te) = split_leave_benchmarks_out(&s, &["beta".into()]).unwrap();
        assert!(tr.samples.iter().all(|x| x.benchmark != "beta"));
    }
}
