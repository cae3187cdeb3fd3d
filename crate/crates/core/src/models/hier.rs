//! Hierarchical LSTM predictor: one LSTM over uAIM deltas, one over the
//! (per-timestep repeated) hardware config, their latents concatenated into a
//! second-level LSTM, then the fully connected head per timestep.

use rand_chacha::ChaCha8Rng;

use crate::nn::{relu, relu_backward, LinearParams, LstmParams, LstmState};

#[derive(Debug, Clone)]
pub struct HierNet {
    pub lstm_u: LstmParams,
    pub lstm_c: LstmParams,
    pub lstm_2: LstmParams,
    pub fc1: LinearParams,
    pub fc2: LinearParams,
}

impl HierNet {
    pub fn init(
        uaim_dim: usize,
        cfg_dim: usize,
        hu: usize,
        hc: usize,
        h2: usize,
        fc: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        HierNet {
            lstm_u: LstmParams::init(uaim_dim, hu, rng),
            lstm_c: LstmParams::init(cfg_dim, hc, rng),
            lstm_2: LstmParams::init(hu + hc, h2, rng),
            fc1: LinearParams::init(h2, fc, rng),
            fc2: LinearParams::init(fc, 1, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        HierNet {
            lstm_u: LstmParams::zeros(self.lstm_u.input_dim, self.lstm_u.hidden),
            lstm_c: LstmParams::zeros(self.lstm_c.input_dim, self.lstm_c.hidden),
            lstm_2: LstmParams::zeros(self.lstm_2.input_dim, self.lstm_2.hidden),
            fc1: LinearParams::zeros(self.fc1.input_dim(), self.fc1.output_dim()),
            fc2: LinearParams::zeros(self.fc2.input_dim(), self.fc2.output_dim()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.lstm_u.param_count()
            + self.lstm_c.param_count()
            + self.lstm_2.param_count()
            + self.fc1.param_count()
            + self.fc2.param_count()
    }

    pub fn tensors(&self) -> Vec<(String, &[f64], usize, usize)> {
        let mut out: Vec<(String, &[f64], usize, usize)> = Vec::new();
        for (name, l) in
            [("lstm_u", &self.lstm_u), ("lstm_c", &self.lstm_c), ("lstm_2", &self.lstm_2)]
        {
            out.push((format!("{name}.wx"), l.wx.data(), l.wx.rows(), l.wx.cols()));
            out.push((format!("{name}.wh"), l.wh.data(), l.wh.rows(), l.wh.cols()));
            out.push((format!("{name}.b"), l.b.as_slice(), l.b.len(), 1));
        }
        out.push(("head_fc1.w".into(), self.fc1.w.data(), self.fc1.w.rows(), self.fc1.w.cols()));
        out.push(("head_fc1.b".into(), self.fc1.b.as_slice(), self.fc1.b.len(), 1));
        out.push(("head_fc2.w".into(), self.fc2.w.data(), self.fc2.w.rows(), self.fc2.w.cols()));
        out.push(("head_fc2.b".into(), self.fc2.b.as_slice(), self.fc2.b.len(), 1));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        for (name, l) in [
            ("lstm_u", &mut self.lstm_u),
            ("lstm_c", &mut self.lstm_c),
            ("lstm_2", &mut self.lstm_2),
        ] {
            out.push((format!("{name}.wx"), l.wx.data_mut()));
            out.push((format!("{name}.wh"), l.wh.data_mut()));
            out.push((format!("{name}.b"), l.b.as_mut_slice()));
        }
        out.push(("head_fc1.w".into(), self.fc1.w.data_mut()));
        out.push(("head_fc1.b".into(), self.fc1.b.as_mut_slice()));
        out.push(("head_fc2.w".into(), self.fc2.w.data_mut()));
        out.push(("head_fc2.b".into(), self.fc2.b.as_mut_slice()));
        out
    }

    fn head(&self, h: &[f64]) -> f64 {
        let z1 = self.fc1.forward(h).expect("dims fixed at build");
        let a1 = relu(&z1);
        self.fc2.forward(&a1).expect("dims fixed at build")[0]
    }

    fn concat_latents(hu: &[Vec<f64>], hc: &[Vec<f64>]) -> Vec<Vec<f64>> {
        hu.iter().zip(hc).map(|(u, c)| u.iter().chain(c.iter()).copied().collect()).collect()
    }

    pub fn forward_window(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<f64> {
        let cfg_seq: Vec<Vec<f64>> = vec![cfg.to_vec(); uaim.len()];
        let (hu, _, _) =
            self.lstm_u.forward_seq(uaim, &LstmState::zeros(self.lstm_u.hidden)).expect("dims");
        let (hc, _, _) = self
            .lstm_c
            .forward_seq(&cfg_seq, &LstmState::zeros(self.lstm_c.hidden))
            .expect("dims");
        let zs = Self::concat_latents(&hu, &hc);
        let (h2, _, _) =
            self.lstm_2.forward_seq(&zs, &LstmState::zeros(self.lstm_2.hidden)).expect("dims");
        h2.iter().map(|h| self.head(h)).collect()
    }

    /// Stateful full-run inference without caches.
    pub fn predict_run(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<f64> {
        let mut su = LstmState::zeros(self.lstm_u.hidden);
        let mut sc = LstmState::zeros(self.lstm_c.hidden);
        let mut s2 = LstmState::zeros(self.lstm_2.hidden);
        let mut out = Vec::with_capacity(uaim.len());
        for u in uaim {
            self.lstm_u.step(u, &mut su);
            self.lstm_c.step(cfg, &mut sc);
            let z: Vec<f64> = su.h.iter().chain(sc.h.iter()).copied().collect();
            self.lstm_2.step(&z, &mut s2);
            out.push(self.head(&s2.h));
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
        let cfg_seq: Vec<Vec<f64>> = vec![cfg.to_vec(); t_len];

        let (hu, _, cache_u) =
            self.lstm_u.forward_seq(uaim, &LstmState::zeros(self.lstm_u.hidden)).expect("dims");
        let (hc, _, cache_c) = self
            .lstm_c
            .forward_seq(&cfg_seq, &LstmState::zeros(self.lstm_c.hidden))
            .expect("dims");
        let zs = Self::concat_latents(&hu, &hc);
        let (h2, _, cache_2) =
            self.lstm_2.forward_seq(&zs, &LstmState::zeros(self.lstm_2.hidden)).expect("dims");

        let mut sq = 0.0;
        let mut d_h2 = vec![vec![0.0; self.lstm_2.hidden]; t_len];
        for t in 0..t_len {
            let z1 = self.fc1.forward(&h2[t]).expect("dims");
            let a1 = relu(&z1);
            let pred = self.fc2.forward(&a1).expect("dims")[0];
            let err = pred - targets[t];
            sq += err * err;
            let dy = vec![2.0 * err];
            let da1 = self.fc2.backward(&a1, &dy, &mut grads.fc2);
            let dz1 = relu_backward(&z1, &da1);
            d_h2[t] = self.fc1.backward(&h2[t], &dz1, &mut grads.fc1);
        }

        let dzs =
            self.lstm_2.backward_seq(&zs, &cache_2, &d_h2, &mut grads.lstm_2).expect("dims");
        let hu_dim = self.lstm_u.hidden;
        let mut d_hu = Vec::with_capacity(t_len);
        let mut d_hc = Vec::with_capacity(t_len);
        for dz in &dzs {
            d_hu.push(dz[..hu_dim].to_vec());
            d_hc.push(dz[hu_dim..].to_vec());
        }
        self.lstm_u.backward_seq(uaim, &cache_u, &d_hu, &mut grads.lstm_u).expect("dims");
        self.lstm_c.backward_seq(&cfg_seq, &cache_c, &d_hc, &mut grads.lstm_c).expect("dims");

        (sq, flatten_grads(&grads))
    }
}

fn flatten_grads(g: &HierNet) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.param_count());
    for (_, data, _, _) in g.tensors() {
        out.extend_from_slice(data);
    }
    out
}
