//! Training loop, hyperparameter sweep, divergence detection, and loss-curve
//! emission.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{compute_norm_stats, contiguous_runs, make_windows, SampleSet};
use crate::error::{Error, Result};
use crate::evalx;
use crate::models::{build, Model, ModelSpec};
use crate::nn::{sgd_step, AdamState, OptimizerKind};
use crate::seed::{derive_seed, rng_for};
use crate::trace::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Minibatch size in training units: windows for recurrent models,
    /// samples for pointwise models (which train on 1-step windows).
    pub batch_size: usize,
    pub epochs: usize,
    /// BPTT window length; stride equals the window (non-overlapping).
    pub window: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Divergence threshold: converged=false once the epoch loss exceeds
    /// this multiple of the first epoch's loss (or goes non-finite).
    pub divergence_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 128,
            epochs: 200,
            window: 32,
            seed: 42,
            optimizer: OptimizerKind::Adam,
            divergence_factor: 100.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.epochs == 0 || self.batch_size == 0 || self.window == 0 {
            return Err(Error::InvalidSpec(
                "lr, epochs, batch_size, and window must be positive".into(),
            ));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidSpec("divergence_factor must exceed 1".into()));
        }
        Ok(())
    }
}

/// One training run's bookkeeping: per-epoch losses and the outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub train_loss: Vec<f64>,
    pub test_mse: Vec<f64>,
    pub final_train: f64,
    pub final_test: f64,
    pub wall_seconds: f64,
    pub converged: bool,
}

/// Trains `spec` on the given sets. Raw sets are normalized internally with
/// training-set statistics; pre-normalized pairs are used as-is. Windows are
/// rebuilt from the (training) samples; recurrent state resets per window.
pub fn train(
    spec: &ModelSpec,
    train_set: &SampleSet,
    test_set: &SampleSet,
    cfg: &TrainConfig,
) -> Result<(Model, RunRecord)> {
    spec.validate()?;
    cfg.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let (tr, te, stats) = match (&train_set.norm, &test_set.norm) {
        (None, None) => {
            let stats = compute_norm_stats(train_set)?;
            (train_set.normalized(&stats)?, test_set.normalized(&stats)?, stats)
        }
        (Some(s), Some(_)) => (train_set.clone(), test_set.clone(), s.clone()),
        _ => {
            return Err(Error::InvalidSpec(
                "train and test sets must both be raw or both be normalized".into(),
            ))
        }
    };

    // Pointwise models treat every interval independently.
    let window = if spec.kind.is_recurrent() { cfg.window } else { 1 };
    let windows = make_windows(&tr, window, window)?;
    if windows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size > windows.len() {
        return Err(Error::InvalidSpec(format!(
            "batch_size {} exceeds {} training units",
            cfg.batch_size,
            windows.len()
        )));
    }
    let test_runs = contiguous_runs(&te);

    let mut model = build(spec)?;
    let mut adam = AdamState::new(model.param_count());
    let mut theta = model.flatten();

    let started = Instant::now();
    let mut record = RunRecord {
        config: cfg.clone(),
        train_loss: Vec::with_capacity(cfg.epochs),
        test_mse: Vec::with_capacity(cfg.epochs),
        final_train: f64::NAN,
        final_test: f64::NAN,
        wall_seconds: 0.0,
        converged: true,
    };

    let mut order: Vec<usize> = (0..windows.len()).collect();
    // Divergence baseline: the very first batch's loss, measured before any
    // parameter update touches the model.
    let mut initial_loss: Option<f64> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng_for(cfg.seed, &["train", "epoch", &epoch.to_string()]));
        let mut epoch_sq = 0.0;
        let mut epoch_n = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            // Per-window gradients in parallel, reduced in index order so the
            // result is independent of thread scheduling.
            let parts: Vec<(f64, usize, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| model.window_sq_and_grad(&windows[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; theta.len()];
            let mut sq = 0.0;
            let mut n = 0usize;
            for (s, count, g) in parts {
                sq += s;
                n += count;
                for (a, v) in grad.iter_mut().zip(&g) {
                    *a += v;
                }
            }
            let scale = 1.0 / n as f64;
            for g in &mut grad {
                *g *= scale;
            }
            initial_loss.get_or_insert(sq / n as f64);
            match cfg.optimizer {
                OptimizerKind::Adam => adam.step(&mut theta, &grad, cfg.lr)?,
                OptimizerKind::Sgd => sgd_step(&mut theta, &grad, cfg.lr)?,
            }
            model.unflatten(&theta)?;
            epoch_sq += sq;
            epoch_n += n;
        }
        let train_loss = epoch_sq / epoch_n as f64;
        let test_mse = evalx::mse_over_runs(&model, &test_runs)?;
        record.train_loss.push(train_loss);
        record.test_mse.push(test_mse);

        let baseline = initial_loss.unwrap_or(train_loss);
        let diverged = !train_loss.is_finite()
            || !test_mse.is_finite()
            || (baseline.is_finite() && train_loss > cfg.divergence_factor * baseline);
        if diverged {
            record.converged = false;
            break;
        }
    }

    record.final_train = *record.train_loss.last().unwrap();
    record.final_test = *record.test_mse.last().unwrap();
    record.wall_seconds = started.elapsed().as_secs_f64();

    model.norm = Some(stats);
    model.meta = crate::models::TrainMeta {
        epochs: record.train_loss.len(),
        final_train_mse: record.final_train,
        final_test_mse: record.final_test,
        seed: cfg.seed,
    };
    Ok((model, record))
}

/// Learning-rate x batch-size grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lrs: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { lrs: vec![1e-2, 1e-3, 1e-4], batch_sizes: vec![128, 512, 2048] }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.lrs.is_empty() || self.batch_sizes.is_empty() {
            return Err(Error::InvalidSpec("sweep grid must be non-empty".into()));
        }
        Ok(())
    }

    /// Cells in declared order: learning rates outer, batch sizes inner.
    pub fn cells(&self) -> Vec<(f64, usize)> {
        self.lrs
            .iter()
            .flat_map(|&lr| self.batch_sizes.iter().map(move |&b| (lr, b)))
            .collect()
    }
}

/// Sweep outcome: records ranked best-first plus the best converged model.
pub struct TuneOutcome {
    pub records: Vec<RunRecord>,
    pub best: Option<usize>,
    pub best_model: Option<Model>,
}

/// Runs one training per grid cell with per-cell derived seeds, then ranks by
/// final test MSE ascending (ties: final train loss, then config order).
/// Diverged cells sink to the bottom and are never selected as best.
pub fn tune(
    spec: &ModelSpec,
    grid: &SweepGrid,
    train_set: &SampleSet,
    test_set: &SampleSet,
    template: &TrainConfig,
) -> Result<TuneOutcome> {
    grid.validate()?;
    let cells = grid.cells();
    let mut runs = Vec::with_capacity(cells.len());
    for (lr, batch_size) in cells {
        let mut cfg = template.clone();
        cfg.lr = lr;
        cfg.batch_size = batch_size;
        cfg.seed = derive_seed(
            template.seed,
            &["tune", &format!("{:016x}", lr.to_bits()), &batch_size.to_string()],
        );
        let (model, record) = train(spec, train_set, test_set, &cfg)?;
        runs.push((model, record));
    }

    let key = |r: &RunRecord| -> (u8, f64, f64) {
        let mse = if r.final_test.is_finite() { r.final_test } else { f64::INFINITY };
        let tl = if r.final_train.is_finite() { r.final_train } else { f64::INFINITY };
        (u8::from(!r.converged), mse, tl)
    };
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&runs[a].1), key(&runs[b].1));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    let mut records = Vec::with_capacity(runs.len());
    let mut best = None;
    let mut best_model = None;
    let mut by_rank: Vec<Option<(Model, RunRecord)>> = runs.into_iter().map(Some).collect();
    for (rank, &idx) in order.iter().enumerate() {
        let (model, record) = by_rank[idx].take().expect("each run taken once");
        if best.is_none() && record.converged {
            best = Some(rank);
            best_model = Some(model);
        }
        records.push(record);
    }
    Ok(TuneOutcome { records, best, best_model })
}

/// Writes per-epoch (epoch, train_loss, test_mse) rows in plot-ready TSV.
pub fn emit_curves(record: &RunRecord, path: &Path) -> Result<()> {
    let mut text = String::from("epoch\ttrain_loss\ttest_mse\n");
    for (e, (tr, te)) in record.train_loss.iter().zip(&record.test_mse).enumerate() {
        text.push_str(&format!("{}\t{}\t{}\n", e + 1, tr, te));
    }
    write_atomic(path, text.as_bytes())
}

/// Parses a curve file back into (epoch, train_loss, test_mse) rows.
pub fn read_curves(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let mut parts = line.split('\t');
        let parse_err = |reason: &str| Error::ParseError { line: idx + 1, reason: reason.into() };
        let epoch: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad epoch"))?;
        let tr: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad train loss"))?;
        let te: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad test mse"))?;
        out.push((epoch, tr, te));
    }
    Ok(out)
}

/// Writes the ranked sweep table: one row per cell plus the per-cell seeds.
pub fn emit_sweep_report(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut text = String::from("lr\tbatch_size\tfinal_train\tfinal_test\tconverged\tseconds\tseed\n");
    for r in records {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\n",
            r.config.lr,
            r.config.batch_size,
            r.final_train,
            r.final_test,
            r.converged,
            r.wall_seconds,
            r.config.seed
        ));
    }
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Sample};

    /// Labels are an exact linear function of the inputs, so linear
    /// regression must fit to numerical precision. The config vector is
    /// constant per (benchmark, sku) group, as trace assembly guarantees.
    fn linear_toy(n: usize) -> SampleSet {
        let mut samples = Vec::new();
        let mut rng = rng_for(5, &["linear-toy"]);
        use rand::Rng;
        let per_group = 10;
        for g in 0..n.div_ceil(per_group) {
            let cfg: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            for k in 0..per_group.min(n - g * per_group) {
                let uaim: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ipc = 1.5 + 0.3 * uaim[0] - 0.2 * uaim[2] + 0.1 * cfg[1];
                samples.push(Sample {
                    benchmark: "lin".into(),
                    sku_id: format!("s{g}"),
                    interval_index: k,
                    uaim,
                    cfg: cfg.clone(),
                    ipc,
                    tag: Provenance::Seen,
                });
            }
        }
        SampleSet { samples, norm: None }
    }

    fn tiny_spec() -> ModelSpec {
        let mut spec = ModelSpec::linreg(3);
        spec.uaim_dim = 4;
        spec.cfg_dim = 2;
        spec
    }

    #[test]
    fn one_epoch_emits_one_loss_pair() {
        let set = linear_toy(10);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        let cfg = TrainConfig { epochs: 1, batch_size: 4, ..Default::default() };
        let (_, record) = train(&tiny_spec(), &tr, &te, &cfg).unwrap();
        assert_eq!(record.train_loss.len(), 1);
        assert_eq!(record.test_mse.len(), 1);
    }

    #[test]
    fn linreg_fits_exactly_linear_labels() {
        let set = linear_toy(200);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        // full-batch gradient descent on a well-conditioned least-squares
        // problem contracts geometrically to the exact solution
        let cfg = TrainConfig {
            epochs: 2000,
            batch_size: 160,
            lr: 0.2,
            optimizer: OptimizerKind::Sgd,
            ..Default::default()
        };
        let (_, record) = train(&tiny_spec(), &tr, &te, &cfg).unwrap();
        assert!(record.converged);
        assert!(record.final_test < 1e-6, "test mse {}", record.final_test);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let set = linear_toy(40);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: 8, ..Default::default() };
        let (m1, r1) = train(&tiny_spec(), &tr, &te, &cfg).unwrap();
        let (m2, r2) = train(&tiny_spec(), &tr, &te, &cfg).unwrap();
        let b1: Vec<u64> = m1.flatten().iter().map(|v| v.to_bits()).collect();
        let b2: Vec<u64> = m2.flatten().iter().map(|v| v.to_bits()).collect();
        assert_eq!(b1, b2);
        assert_eq!(
            r1.train_loss.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            r2.train_loss.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn divergence_is_flagged() {
        let set = linear_toy(60);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        let cfg = TrainConfig { epochs: 50, batch_size: 8, lr: 1e6, ..Default::default() };
        let (_, record) = train(&tiny_spec(), &tr, &te, &cfg).unwrap();
        assert!(!record.converged);
        assert!(record.train_loss.len() < 50);
    }

    #[test]
    fn batch_size_cannot_exceed_units() {
        let set = linear_toy(10);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        let cfg = TrainConfig { epochs: 1, batch_size: 1000, ..Default::default() };
        assert!(matches!(train(&tiny_spec(), &tr, &te, &cfg), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn sweep_counts_ranking_and_determinism() {
        let set = linear_toy(60);
        let (tr, te) = crate::dataset::split_random(&set, 0.8, 1).unwrap();
        let grid = SweepGrid { lrs: vec![1e-3], batch_sizes: vec![8, 16] };
        let template = TrainConfig { epochs: 2, ..Default::default() };
        let out = tune(&tiny_spec(), &grid, &tr, &te, &template).unwrap();
        assert_eq!(out.records.len(), 2);
        let out2 = tune(&tiny_spec(), &grid, &tr, &te, &template).unwrap();
        for (a, b) in out.records.iter().zip(&out2.records) {
            assert_eq!(a.final_test.to_bits(), b.final_test.to_bits());
            assert_eq!(a.config.seed, b.config.seed);
        }
        // ranked ascending by final test mse among converged
        for w in out.records.windows(2) {
            if w[0].converged && w[1].converged {
                assert!(w[0].final_test <= w[1].final_test);
            }
        }
    }

    #[test]
    fn curves_round_trip() {
        let record = RunRecord {
            config: TrainConfig::default(),
            train_loss: vec![0.5, 0.25, 0.125],
            test_mse: vec![0.6, 0.3, 0.15],
            final_train: 0.125,
            final_test: 0.15,
            wall_seconds: 1.0,
            converged: true,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.tsv");
        emit_curves(&record, &path).unwrap();
        let rows = read_curves(&path).unwrap();
        assert_eq!(rows.len(), 3);
        for (i, (e, tr, te)) in rows.iter().enumerate() {
            assert_eq!(*e, i + 1);
            assert_eq!(*tr, record.train_loss[i]);
            assert_eq!(*te, record.test_mse[i]);
        }
    }
}
