//! Pointwise predictors: linear regression (no hidden layers) and the MLP.
//! Each interval is scored independently from concat(uaim, cfg).

use rand_chacha::ChaCha8Rng;

use crate::nn::{relu, relu_backward, LinearParams};

#[derive(Debug, Clone)]
pub struct FlatNet {
    /// Affine layers with ReLU between them (none after the last).
    pub layers: Vec<LinearParams>,
}

impl FlatNet {
    /// `hidden` lists hidden widths; empty means plain linear regression.
    pub fn init(input: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let layers = dims.windows(2).map(|w| LinearParams::init(w[0], w[1], rng)).collect();
        FlatNet { layers }
    }

    pub fn zeros_like(&self) -> Self {
        FlatNet {
            layers: self
                .layers
                .iter()
                .map(|l| LinearParams::zeros(l.input_dim(), l.output_dim()))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn tensors(&self) -> Vec<(String, &[f64], usize, usize)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("fc{i}.w"), l.w.data(), l.w.rows(), l.w.cols()));
            out.push((format!("fc{i}.b"), l.b.as_slice(), l.b.len(), 1));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("fc{i}.w"), l.w.data_mut()));
            out.push((format!("fc{i}.b"), l.b.as_mut_slice()));
        }
        out
    }

    fn forward_sample(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.forward(&a).expect("dims fixed at build");
            a = if i < last { relu(&z) } else { z };
        }
        a[0]
    }

    pub fn forward_window(&self, uaim: &[Vec<f64>], cfg: &[f64]) -> Vec<f64> {
        uaim.iter()
            .map(|u| {
                let x: Vec<f64> = u.iter().chain(cfg).copied().collect();
                self.forward_sample(&x)
            })
            .collect()
    }

    /// Sum of squared errors over the window and the gradient of that sum.
    pub fn window_sq_and_grad(
        &self,
        uaim: &[Vec<f64>],
        cfg: &[f64],
        targets: &[f64],
    ) -> (f64, Vec<f64>) {
        let mut grads = self.zeros_like();
        let mut sq = 0.0;
        let last = self.layers.len() - 1;
        for (u, &y) in uaim.iter().zip(targets) {
            let x: Vec<f64> = u.iter().chain(cfg).copied().collect();
            // forward, keeping pre-activations and activations
            let mut acts = vec![x];
            let mut zs = Vec::with_capacity(self.layers.len());
            for (i, l) in self.layers.iter().enumerate() {
                let z = l.forward(acts.last().unwrap()).expect("dims fixed at build");
                zs.push(z.clone());
                acts.push(if i < last { relu(&z) } else { z });
            }
            let pred = acts.last().unwrap()[0];
            let err = pred - y;
            sq += err * err;
            // backward
            let mut dy = vec![2.0 * err];
            for i in (0..self.layers.len()).rev() {
                let dx = self.layers[i].backward(&acts[i], &dy, &mut grads.layers[i]);
                dy = if i > 0 { relu_backward(&zs[i - 1], &dx) } else { dx };
            }
        }
        (sq, flatten_grads(&grads))
    }
}

fn flatten_grads(g: &FlatNet) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.param_count());
    for (_, data, _, _) in g.tensors() {
        out.extend_from_slice(data);
    }
    out
}
