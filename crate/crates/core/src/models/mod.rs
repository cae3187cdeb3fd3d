//! The four predictors (linear regression, MLP, simple LSTM, hierarchical
//! LSTM), interval-sequence inference, full-benchmark aggregation, and
//! checkpoint IO.

mod checkpoint;
mod flat;
mod hier;
mod simple;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

use serde::{Deserialize, Serialize};

use crate::dataset::{normalize, NormStats, Window};
use crate::error::{Error, Result};
use crate::nn::check::{grad_check_fn, GradCheckReport};
use crate::seed::rng_for;
use crate::trace::{BenchmarkTrace, FeatureSchema, HardwareConfig, IntervalRecord};

pub(crate) use flat::FlatNet;
pub(crate) use hier::HierNet;
pub(crate) use simple::SimpleNet;

/// Floor applied to inference outputs so cycle aggregation never divides by
/// a vanishing IPC.
pub const PREDICT_CLAMP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linreg,
    Mlp,
    SimpleLstm,
    HierLstm,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linreg => "linreg",
            ModelKind::Mlp => "mlp",
            ModelKind::SimpleLstm => "simple_lstm",
            ModelKind::HierLstm => "hier_lstm",
        }
    }

    /// Whether inference carries recurrent state across intervals.
    pub fn is_recurrent(&self) -> bool {
        matches!(self, ModelKind::SimpleLstm | ModelKind::HierLstm)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linreg" => Ok(ModelKind::Linreg),
            "mlp" => Ok(ModelKind::Mlp),
            "simple_lstm" => Ok(ModelKind::SimpleLstm),
            "hier_lstm" => Ok(ModelKind::HierLstm),
            other => Err(Error::InvalidSpec(format!("unknown model kind '{other}'"))),
        }
    }
}

fn default_uaim_dim() -> usize {
    crate::trace::FEATURE_COUNT
}
fn default_cfg_dim() -> usize {
    crate::trace::CFG_DIM
}

/// Topology description: which predictor and its widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default = "default_uaim_dim")]
    pub uaim_dim: usize,
    #[serde(default = "default_cfg_dim")]
    pub cfg_dim: usize,
    /// Simple-LSTM hidden width.
    #[serde(default)]
    pub hidden: usize,
    /// Simple-LSTM stacking depth.
    #[serde(default)]
    pub lstm_layers: usize,
    /// Hierarchical widths: uAIM branch, config branch, second level.
    #[serde(default)]
    pub hu: usize,
    #[serde(default)]
    pub hc: usize,
    #[serde(default)]
    pub h2: usize,
    /// First fully connected layer width (second is the scalar output).
    #[serde(default)]
    pub fc: usize,
    /// MLP hidden widths (input and scalar output are implicit).
    #[serde(default)]
    pub mlp_widths: Vec<usize>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn linreg(seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::Linreg,
            uaim_dim: default_uaim_dim(),
            cfg_dim: default_cfg_dim(),
            hidden: 0,
            lstm_layers: 0,
            hu: 0,
            hc: 0,
            h2: 0,
            fc: 0,
            mlp_widths: Vec::new(),
            seed,
        }
    }

    pub fn mlp(seed: u64) -> Self {
        ModelSpec { kind: ModelKind::Mlp, mlp_widths: vec![128, 64], ..ModelSpec::linreg(seed) }
    }

    pub fn simple_lstm(seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::SimpleLstm,
            hidden: 64,
            lstm_layers: 2,
            fc: 32,
            ..ModelSpec::linreg(seed)
        }
    }

    pub fn hier_lstm(seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::HierLstm,
            hu: 64,
            hc: 16,
            h2: 64,
            fc: 32,
            ..ModelSpec::linreg(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.uaim_dim == 0 || self.cfg_dim == 0 {
            return Err(Error::InvalidSpec("input dims must be >= 1".into()));
        }
        match self.kind {
            ModelKind::Linreg => Ok(()),
            ModelKind::Mlp => {
                if self.mlp_widths.is_empty() || self.mlp_widths.contains(&0) {
                    return Err(Error::InvalidSpec("mlp needs non-zero hidden widths".into()));
                }
                Ok(())
            }
            ModelKind::SimpleLstm => {
                if self.hidden == 0 || self.lstm_layers == 0 || self.fc == 0 {
                    return Err(Error::InvalidSpec(
                        "simple_lstm needs hidden, lstm_layers, and fc >= 1".into(),
                    ));
                }
                Ok(())
            }
            ModelKind::HierLstm => {
                if self.hu == 0 || self.hc == 0 || self.h2 == 0 || self.fc == 0 {
                    return Err(Error::InvalidSpec("hier_lstm needs hu, hc, h2, fc >= 1".into()));
                }
                Ok(())
            }
        }
    }
}

/// Training metadata carried inside checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainMeta {
    pub epochs: usize,
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(crate) enum Net {
    Flat(FlatNet),
    Simple(SimpleNet),
    Hier(HierNet),
}

/// A named view into the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub rows: usize,
    pub cols: usize,
}

/// A built predictor: topology, parameters, and (once trained) the
/// normalization stats its inputs expect.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub norm: Option<NormStats>,
    /// Identity of the feature schema the model was trained against.
    pub schema_hash: u64,
    pub meta: TrainMeta,
    pub(crate) net: Net,
}

/// Builds a model with deterministic seed-derived initialization.
pub fn build(spec: &ModelSpec) -> Result<Model> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, &["init", spec.kind.name()]);
    let input = spec.uaim_dim + spec.cfg_dim;
    let net = match spec.kind {
        ModelKind::Linreg => Net::Flat(FlatNet::init(input, &[], &mut rng)),
        ModelKind::Mlp => Net::Flat(FlatNet::init(input, &spec.mlp_widths, &mut rng)),
        ModelKind::SimpleLstm => Net::Simple(SimpleNet::init(
            input,
            spec.hidden,
            spec.lstm_layers,
            spec.fc,
            &mut rng,
        )),
        ModelKind::HierLstm => Net::Hier(HierNet::init(
            spec.uaim_dim,
            spec.cfg_dim,
            spec.hu,
            spec.hc,
            spec.h2,
            spec.fc,
            &mut rng,
        )),
    };
    Ok(Model {
        spec: spec.clone(),
        norm: None,
        schema_hash: FeatureSchema::canonical().hash64(),
        meta: TrainMeta::default(),
        net,
    })
}

impl Model {
    fn check_window_dims(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Result<()> {
        if uaim.is_empty() {
            return Err(Error::ShapeMismatch("empty window".into()));
        }
        if uaim[0].len() != self.spec.uaim_dim || cfg.len() != self.spec.cfg_dim {
            return Err(Error::SchemaMismatch(format!(
                "window dims {}x{} vs model {}x{}",
                uaim[0].len(),
                cfg.len(),
                self.spec.uaim_dim,
                self.spec.cfg_dim
            )));
        }
        Ok(())
    }

    /// Raw per-step predictions over one normalized window (training path;
    /// state starts at zero, no output clamp).
    pub fn forward_window(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Result<Vec<f64>> {
        self.check_window_dims(uaim, cfg)?;
        Ok(match &self.net {
            Net::Flat(n) => n.forward_window(uaim, cfg),
            Net::Simple(n) => n.forward_window(uaim, cfg),
            Net::Hier(n) => n.forward_window(uaim, cfg),
        })
    }

    /// Sum of squared errors over one window plus the gradient of that sum
    /// with respect to the flat parameter vector. Callers divide by the total
    /// step count to get mean-loss gradients.
    pub fn window_sq_and_grad(&self, w: &Window) -> Result<(f64, usize, Vec<f64>)> {
        self.check_window_dims(&w.uaim, &w.cfg)?;
        let (sq, grads) = match &self.net {
            Net::Flat(n) => n.window_sq_and_grad(&w.uaim, &w.cfg, &w.ipc),
            Net::Simple(n) => n.window_sq_and_grad(&w.uaim, &w.cfg, &w.ipc),
            Net::Hier(n) => n.window_sq_and_grad(&w.uaim, &w.cfg, &w.ipc),
        };
        Ok((sq, w.len(), grads))
    }

    /// Mean squared error over a window set (forward only).
    pub fn loss(&self, windows: &[Window]) -> Result<f64> {
        if windows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut sq = 0.0;
        let mut n = 0usize;
        for w in windows {
            let preds = self.forward_window(&w.uaim, &w.cfg)?;
            for (p, y) in preds.iter().zip(&w.ipc) {
                sq += (p - y) * (p - y);
            }
            n += w.len();
        }
        Ok(sq / n as f64)
    }

    /// Mean loss and its flat gradient over a window set (sequential; training
    /// batches parallelize over [`Model::window_sq_and_grad`] instead).
    pub fn loss_and_grad(&self, windows: &[Window]) -> Result<(f64, Vec<f64>)> {
        if windows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut sq = 0.0;
        let mut n = 0usize;
        let mut acc = vec![0.0; self.param_count()];
        for w in windows {
            let (s, count, g) = self.window_sq_and_grad(w)?;
            sq += s;
            n += count;
            for (a, v) in acc.iter_mut().zip(&g) {
                *a += v;
            }
        }
        let scale = 1.0 / n as f64;
        for a in &mut acc {
            *a *= scale;
        }
        Ok((sq / n as f64, acc))
    }

    /// Stateful raw predictions over one normalized run (no clamp).
    pub fn predict_run_raw(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Result<Vec<f64>> {
        self.check_window_dims(uaim, cfg)?;
        Ok(match &self.net {
            Net::Flat(n) => n.forward_window(uaim, cfg),
            Net::Simple(n) => n.predict_run(uaim, cfg),
            Net::Hier(n) => n.predict_run(uaim, cfg),
        })
    }

    fn normalized_inputs(
        &self,
        trace: &BenchmarkTrace,
        cfg: &HardwareConfig,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let stats = self.norm.as_ref().ok_or(Error::UnnormalizedInput)?;
        let mut uaim = Vec::with_capacity(trace.intervals.len());
        for iv in &trace.intervals {
            if iv.uaim_delta.len() != self.spec.uaim_dim {
                return Err(Error::SchemaMismatch(format!(
                    "trace {} has {}-wide intervals, model expects {}",
                    trace.benchmark,
                    iv.uaim_delta.len(),
                    self.spec.uaim_dim
                )));
            }
            uaim.push(normalize(&iv.uaim_delta, &stats.uaim_mean, &stats.uaim_std)?);
        }
        let cfg_vec = normalize(&cfg.feature_vec(), &stats.cfg_mean, &stats.cfg_std)?;
        Ok((uaim, cfg_vec))
    }

    /// Per-interval IPC predictions for a raw trace under `cfg`. Inputs are
    /// normalized with the model's stats; recurrent state is carried across
    /// the whole trace; outputs are clamped to at least [`PREDICT_CLAMP`].
    pub fn predict_intervals(
        &self,
        trace: &BenchmarkTrace,
        cfg: &HardwareConfig,
    ) -> Result<Vec<f64>> {
        let (uaim, cfg_vec) = self.normalized_inputs(trace, cfg)?;
        let mut preds = self.predict_run_raw(&uaim, &cfg_vec)?;
        for p in &mut preds {
            *p = p.max(PREDICT_CLAMP);
        }
        Ok(preds)
    }

    /// Full-benchmark IPC: per-interval predictions converted to cycles,
    /// summed, and divided into total instructions.
    pub fn predict_full_benchmark(
        &self,
        trace: &BenchmarkTrace,
        cfg: &HardwareConfig,
    ) -> Result<f64> {
        let preds = self.predict_intervals(trace, cfg)?;
        aggregate_ipc(&trace.intervals, &preds)
    }

    pub fn param_count(&self) -> usize {
        match &self.net {
            Net::Flat(n) => n.param_count(),
            Net::Simple(n) => n.param_count(),
            Net::Hier(n) => n.param_count(),
        }
    }

    /// Named layout of the flat parameter vector, in canonical layer order.
    pub fn layout(&self) -> Vec<ParamEntry> {
        let tensors = match &self.net {
            Net::Flat(n) => n.tensors(),
            Net::Simple(n) => n.tensors(),
            Net::Hier(n) => n.tensors(),
        };
        let mut out = Vec::with_capacity(tensors.len());
        let mut offset = 0;
        for (name, data, rows, cols) in tensors {
            out.push(ParamEntry { name, offset, len: data.len(), rows, cols });
            offset += data.len();
        }
        out
    }

    /// Copies all parameters into one flat vector (canonical layer order).
    pub fn flatten(&self) -> Vec<f64> {
        let tensors = match &self.net {
            Net::Flat(n) => n.tensors(),
            Net::Simple(n) => n.tensors(),
            Net::Hier(n) => n.tensors(),
        };
        let mut out = Vec::with_capacity(self.param_count());
        for (_, data, _, _) in tensors {
            out.extend_from_slice(data);
        }
        out
    }

    /// Writes a flat vector back into the parameter tensors.
    pub fn unflatten(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "flat vector {} vs parameter count {}",
                theta.len(),
                self.param_count()
            )));
        }
        let tensors = match &mut self.net {
            Net::Flat(n) => n.tensors_mut(),
            Net::Simple(n) => n.tensors_mut(),
            Net::Hier(n) => n.tensors_mut(),
        };
        let mut offset = 0;
        for (_, data) in tensors {
            data.copy_from_slice(&theta[offset..offset + data.len()]);
            offset += data.len();
        }
        Ok(())
    }
}

/// Aggregates per-interval IPC into full-benchmark IPC by summing predicted
/// cycles: cycles_k = instructions_k / max(ipc_k, clamp); result is total
/// instructions over total cycles.
pub fn aggregate_ipc(intervals: &[IntervalRecord], ipc: &[f64]) -> Result<f64> {
    if intervals.len() != ipc.len() || intervals.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} intervals vs {} predictions",
            intervals.len(),
            ipc.len()
        )));
    }
    let mut instructions = 0.0;
    let mut cycles = 0.0;
    for (iv, &p) in intervals.iter().zip(ipc) {
        instructions += iv.instructions as f64;
        cycles += iv.instructions as f64 / p.max(PREDICT_CLAMP);
    }
    Ok(instructions / cycles)
}

/// Verifies analytic gradients against central finite differences over every
/// parameter, restoring the model's parameters afterwards.
pub fn grad_check(model: &mut Model, windows: &[Window], eps: f64) -> Result<GradCheckReport> {
    let (_, analytic) = model.loss_and_grad(windows)?;
    let mut theta = model.flatten();
    let layout = model.layout();
    let name_of = move |k: usize| -> String {
        for e in &layout {
            if k >= e.offset && k < e.offset + e.len {
                return format!("{}[{}]", e.name, k - e.offset);
            }
        }
        format!("param[{k}]")
    };
    let report = grad_check_fn(
        &mut theta,
        &analytic,
        eps,
        |th| {
            model.unflatten(th).expect("theta length is fixed");
            model.loss(windows).expect("loss over checked windows")
        },
        name_of,
    );
    model.unflatten(&theta)?;
    Ok(report)
}
