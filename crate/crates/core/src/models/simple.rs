//! Simple LSTM predictor: concat(uaim, cfg) per timestep into a stacked
//! LSTM, then a two-layer fully connected head per timestep.

use rand_chacha::ChaCha8Rng;

use crate::nn::{relu, relu_backward, LinearParams, LstmParams, LstmState};

#[derive(Debug, Clone)]
pub struct SimpleNet {
    pub layers: Vec<LstmParams>,
    pub fc1: LinearParams,
    pub fc2: LinearParams,
}

impl SimpleNet {
    pub fn init(
        input: usize,
        hidden: usize,
        depth: usize,
        fc: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let d = if l == 0 { input } else { hidden };
            layers.push(LstmParams::init(d, hidden, rng));
        }
        SimpleNet {
            layers,
            fc1: LinearParams::init(hidden, fc, rng),
            fc2: LinearParams::init(fc, 1, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        SimpleNet {
            layers: self
                .layers
                .iter()
                .map(|l| LstmParams::zeros(l.input_dim, l.hidden))
                .collect(),
            fc1: LinearParams::zeros(self.fc1.input_dim(), self.fc1.output_dim()),
            fc2: LinearParams::zeros(self.fc2.input_dim(), self.fc2.output_dim()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum::<usize>()
            + self.fc1.param_count()
            + self.fc2.param_count()
    }

    pub fn tensors(&self) -> Vec<(String, &[f64], usize, usize)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("lstm{i}.wx"), l.wx.data(), l.wx.rows(), l.wx.cols()));
            out.push((format!("lstm{i}.wh"), l.wh.data(), l.wh.rows(), l.wh.cols()));
            out.push((format!("lstm{i}.b"), l.b.as_slice(), l.b.len(), 1));
        }
        out.push(("head_fc1.w".into(), self.fc1.w.data(), self.fc1.w.rows(), self.fc1.w.cols()));
        out.push(("head_fc1.b".into(), self.fc1.b.as_slice(), self.fc1.b.len(), 1));
        out.push(("head_fc2.w".into(), self.fc2.w.data(), self.fc2.w.rows(), self.fc2.w.cols()));
        out.push(("head_fc2.b".into(), self.fc2.b.as_slice(), self.fc2.b.len(), 1));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("lstm{i}.wx"), l.wx.data_mut()));
            out.push((format!("lstm{i}.wh"), l.wh.data_mut()));
            out.push((format!("lstm{i}.b"), l.b.as_mut_slice()));
        }
        out.push(("head_fc1.w".into(), self.fc1.w.data_mut()));
        out.push(("head_fc1.b".into(), self.fc1.b.as_mut_slice()));
        out.push(("head_fc2.w".into(), self.fc2.w.data_mut()));
        out.push(("head_fc2.b".into(), self.fc2.b.as_mut_slice()));
        out
    }

    fn concat_inputs(uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<Vec<f64>> {
        uaim.iter().map(|u| u.iter().chain(cfg).copied().collect()).collect()
    }

    fn head(&self, h: &[f64]) -> f64 {
        let z1 = self.fc1.forward(h).expect("dims fixed at build");
        let a1 = relu(&z1);
        self.fc2.forward(&a1).expect("dims fixed at build")[0]
    }

    pub fn forward_window(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<f64> {
        let mut xs = Self::concat_inputs(uaim, cfg);
        for l in &self.layers {
            let (hs, _, _) = l.forward_seq(&xs, &LstmState::zeros(l.hidden)).expect("dims fixed");
            xs = hs;
        }
        xs.iter().map(|h| self.head(h)).collect()
    }

    /// Stateful full-run inference without caches.
    pub fn predict_run(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<f64> {
        let xs = Self::concat_inputs(uaim, cfg);
        let mut states: Vec<LstmState> =
            self.layers.iter().map(|l| LstmState::zeros(l.hidden)).collect();
        let mut out = Vec::with_capacity(xs.len());
        for x in &xs {
            let mut v = x.clone();
            for (l, s) in self.layers.iter().zip(&mut states) {
                l.step(&v, s);
                v = s.h.clone();
            }
            out.push(self.head(&v));
        }
        out
    }

    pub fn window_sq_and_grad(
        &self,
        uaim: &[Vec<f64>],
        cfg: &[f64],
        targets: &[f64],
    ) -> (f64, Vec<f64>) {
        let t_len = uaim.len();
        let mut grads = self.zeros_like();

        // forward through the stack, keeping per-layer inputs and caches
        let mut layer_inputs = vec![Self::concat_inputs(uaim, cfg)];
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (hs, _, cache) = l
                .forward_seq(layer_inputs.last().unwrap(), &LstmState::zeros(l.hidden))
                .expect("dims fixed");
            caches.push(cache);
            layer_inputs.push(hs);
        }
        let top = layer_inputs.last().unwrap();

        // head per timestep
        let mut sq = 0.0;
        let mut d_hs_top = vec![vec![0.0; self.fc1.input_dim()]; t_len];
        for t in 0..t_len {
            let z1 = self.fc1.forward(&top[t]).expect("dims fixed");
            let a1 = relu(&z1);
            let pred = self.fc2.forward(&a1).expect("dims fixed")[0];
            let err = pred - targets[t];
            sq += err * err;
            let dy = vec![2.0 * err];
            let da1 = self.fc2.backward(&a1, &dy, &mut grads.fc2);
            let dz1 = relu_backward(&z1, &da1);
            d_hs_top[t] = self.fc1.backward(&top[t], &dz1, &mut grads.fc1);
        }

        // BPTT down the stack
        let mut d_hs = d_hs_top;
        for i in (0..self.layers.len()).rev() {
            d_hs = self.layers[i]
                .backward_seq(&layer_inputs[i], &caches[i], &d_hs, &mut grads.layers[i])
                .expect("dims fixed");
        }

        (sq, flatten_grads(&grads))
    }
}

fn flatten_grads(g: &SimpleNet) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.param_count());
    for (_, data, _, _) in g.tensors() {
        out.extend_from_slice(data);
    }
    out
}
