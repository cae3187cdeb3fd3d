//! LSTM layer: forward, stateful stepping, and backpropagation through time.
//!
//! Gate order inside the packed 4H pre-activation vector is fixed as
//! [input i, forget f, candidate g, output o]; checkpoints rely on it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM layer's parameters (and, reused, its gradient buffers).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    /// 4H x D input weights.
    pub wx: Matrix,
    /// 4H x H recurrent weights.
    pub wh: Matrix,
    /// 4H bias.
    pub b: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            input_dim,
            hidden,
            wx: Matrix::zeros(4 * hidden, input_dim),
            wh: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform(-k, k) init with k = 1/sqrt(fan_in); forget-gate bias 1.0.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = LstmParams::zeros(input_dim, hidden);
        let kx = 1.0 / (input_dim as f64).sqrt();
        for v in p.wx.data_mut() {
            *v = rng.random_range(-kx..kx);
        }
        let kh = 1.0 / (hidden as f64).sqrt();
        for v in p.wh.data_mut() {
            *v = rng.random_range(-kh..kh);
        }
        for v in &mut p.b[hidden..2 * hidden] {
            *v = 1.0;
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.wx.data().len() + self.wh.data().len() + self.b.len()
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "lstm input {} vs declared {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }
}

/// Hidden and cell state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Per-step values the backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct LstmSeqCache {
    pub steps: Vec<LstmStepCache>,
}

impl LstmParams {
    /// One cell step producing the new state and a backward cache.
    pub fn cell_forward(&self, x: &[f64], state: &LstmState) -> Result<(LstmState, LstmStepCache)> {
        self.check_x(x)?;
        if state.h.len() != self.hidden || state.c.len() != self.hidden {
            return Err(Error::ShapeMismatch(format!(
                "lstm state {} vs hidden {}",
                state.h.len(),
                self.hidden
            )));
        }
        let hn = self.hidden;
        let mut z = self.b.clone();
        self.wx.matvec_add(x, &mut z);
        self.wh.matvec_add(&state.h, &mut z);
        let mut i = Vec::with_capacity(hn);
        let mut f = Vec::with_capacity(hn);
        let mut g = Vec::with_capacity(hn);
        let mut o = Vec::with_capacity(hn);
        for k in 0..hn {
            i.push(sigmoid(z[k]));
            f.push(sigmoid(z[hn + k]));
            g.push(z[2 * hn + k].tanh());
            o.push(sigmoid(z[3 * hn + k]));
        }
        let mut c = Vec::with_capacity(hn);
        let mut tanh_c = Vec::with_capacity(hn);
        let mut h = Vec::with_capacity(hn);
        for k in 0..hn {
            let ck = f[k] * state.c[k] + i[k] * g[k];
            let tck = ck.tanh();
            c.push(ck);
            tanh_c.push(tck);
            h.push(o[k] * tck);
        }
        let cache = LstmStepCache {
            i,
            f,
            g,
            o,
            c: c.clone(),
            tanh_c,
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
        };
        Ok((LstmState { h, c }, cache))
    }

    /// Inference-only step: updates `state` in place, no cache.
    pub fn step(&self, x: &[f64], state: &mut LstmState) {
        let hn = self.hidden;
        let mut z = self.b.clone();
        self.wx.matvec_add(x, &mut z);
        self.wh.matvec_add(&state.h, &mut z);
        for k in 0..hn {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[hn + k]);
            let g = z[2 * hn + k].tanh();
            let o = sigmoid(z[3 * hn + k]);
            let c = f * state.c[k] + i * g;
            state.c[k] = c;
            state.h[k] = o * c.tanh();
        }
    }

    /// Runs the layer over a sequence from `state0`, returning per-step hidden
    /// vectors, the final state, and the caches for [`Self::backward_seq`].
    pub fn forward_seq(
        &self,
        xs: &[Vec<f64>],
        state0: &LstmState,
    ) -> Result<(Vec<Vec<f64>>, LstmState, LstmSeqCache)> {
        if xs.is_empty() {
            return Err(Error::ShapeMismatch("empty input sequence".into()));
        }
        let mut state = state0.clone();
        let mut hs = Vec::with_capacity(xs.len());
        let mut cache = LstmSeqCache { steps: Vec::with_capacity(xs.len()) };
        for x in xs {
            let (next, step) = self.cell_forward(x, &state)?;
            hs.push(next.h.clone());
            cache.steps.push(step);
            state = next;
        }
        Ok((hs, state, cache))
    }

    /// Full BPTT. `d_hs[t]` is dLoss/dh_t from the consumers of h_t; returns
    /// dLoss/dx_t for each step and the parameter gradients (accumulated into
    /// `grads`, which must be zero-shaped like `self`).
    pub fn backward_seq(
        &self,
        xs: &[Vec<f64>],
        cache: &LstmSeqCache,
        d_hs: &[Vec<f64>],
        grads: &mut LstmParams,
    ) -> Result<Vec<Vec<f64>>> {
        let t_len = xs.len();
        if cache.steps.len() != t_len || d_hs.len() != t_len {
            return Err(Error::ShapeMismatch(format!(
                "backward_seq: {} inputs, {} caches, {} output grads",
                t_len,
                cache.steps.len(),
                d_hs.len()
            )));
        }
        let hn = self.hidden;
        let mut dxs = vec![vec![0.0; self.input_dim]; t_len];
        let mut dh_next = vec![0.0; hn];
        let mut dc_next = vec![0.0; hn];
        let mut dz = vec![0.0; 4 * hn];
        for t in (0..t_len).rev() {
            let s = &cache.steps[t];
            for k in 0..hn {
                let dh = d_hs[t][k] + dh_next[k];
                let tc = s.tanh_c[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - tc * tc);
                let (i, f, g, o) = (s.i[k], s.f[k], s.g[k], s.o[k]);
                dz[k] = dc * g * i * (1.0 - i);
                dz[hn + k] = dc * s.c_prev[k] * f * (1.0 - f);
                dz[2 * hn + k] = dc * i * (1.0 - g * g);
                dz[3 * hn + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            grads.wx.add_outer(&dz, &xs[t]);
            grads.wh.add_outer(&dz, &s.h_prev);
            for (gb, &d) in grads.b.iter_mut().zip(&dz) {
                *gb += d;
            }
            self.wx.tvec_add(&dz, &mut dxs[t]);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            self.wh.tvec_add(&dz, &mut dh_next);
        }
        Ok(dxs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn zero_params_give_zero_outputs() {
        // logistic(0) = 0.5 gates, tanh(0) = 0 candidate -> h' = c' = 0.
        let p = LstmParams::zeros(3, 2);
        let (state, _) = p.cell_forward(&[0.0; 3], &LstmState::zeros(2)).unwrap();
        assert_eq!(state.h, vec![0.0, 0.0]);
        assert_eq!(state.c, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_carries_cell() {
        // f -> 1 and i -> 0 via huge biases: c' = c exactly up to tanh rounding.
        let mut p = LstmParams::zeros(1, 1);
        p.b[0] = -1e3; // input gate ~ 0
        p.b[1] = 1e3; // forget gate ~ 1
        let state0 = LstmState { h: vec![0.0], c: vec![0.7] };
        let (state, _) = p.cell_forward(&[0.0], &state0).unwrap();
        assert!((state.c[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn cell_matches_scalar_loop_oracle() {
        let mut rng = rng_for(3, &["lstm-test"]);
        let d = 3;
        let h = 4;
        let p = LstmParams::init(d, h, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let state0 = LstmState {
            h: (0..h).map(|_| rng.random_range(-1.0..1.0)).collect(),
            c: (0..h).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let (state, _) = p.cell_forward(&x, &state0).unwrap();

        // independent per-element reimplementation
        for k in 0..h {
            let mut zi = p.b[k];
            let mut zf = p.b[h + k];
            let mut zg = p.b[2 * h + k];
            let mut zo = p.b[3 * h + k];
            for j in 0..d {
                zi += p.wx.get(k, j) * x[j];
                zf += p.wx.get(h + k, j) * x[j];
                zg += p.wx.get(2 * h + k, j) * x[j];
                zo += p.wx.get(3 * h + k, j) * x[j];
            }
            for j in 0..h {
                zi += p.wh.get(k, j) * state0.h[j];
                zf += p.wh.get(h + k, j) * state0.h[j];
                zg += p.wh.get(2 * h + k, j) * state0.h[j];
                zo += p.wh.get(3 * h + k, j) * state0.h[j];
            }
            let c = sigmoid(zf) * state0.c[k] + sigmoid(zi) * zg.tanh();
            let hh = sigmoid(zo) * c.tanh();
            assert!((state.c[k] - c).abs() < 1e-12);
            assert!((state.h[k] - hh).abs() < 1e-12);
        }
    }

    #[test]
    fn seq_of_one_reduces_to_cell() {
        let mut rng = rng_for(4, &["lstm-test"]);
        let p = LstmParams::init(2, 3, &mut rng);
        let x = vec![0.3, -0.8];
        let s0 = LstmState::zeros(3);
        let (hs, fin, _) = p.forward_seq(std::slice::from_ref(&x), &s0).unwrap();
        let (cell, _) = p.cell_forward(&x, &s0).unwrap();
        assert_eq!(hs[0], cell.h);
        assert_eq!(fin.c, cell.c);
    }

    #[test]
    fn causality_future_inputs_do_not_change_past_outputs() {
        let mut rng = rng_for(5, &["lstm-test"]);
        let p = LstmParams::init(2, 3, &mut rng);
        let mut xs: Vec<Vec<f64>> =
            (0..4).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let s0 = LstmState::zeros(3);
        let (hs1, _, _) = p.forward_seq(&xs, &s0).unwrap();
        xs[3][0] += 10.0;
        let (hs2, _, _) = p.forward_seq(&xs, &s0).unwrap();
        for t in 0..3 {
            assert_eq!(hs1[t], hs2[t]);
        }
        assert_ne!(hs1[3], hs2[3]);
    }

    #[test]
    fn step_matches_cached_forward() {
        let mut rng = rng_for(6, &["lstm-test"]);
        let p = LstmParams::init(3, 4, &mut rng);
        let xs: Vec<Vec<f64>> =
            (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let (hs, fin, _) = p.forward_seq(&xs, &LstmState::zeros(4)).unwrap();
        let mut state = LstmState::zeros(4);
        for (t, x) in xs.iter().enumerate() {
            p.step(x, &mut state);
            assert_eq!(state.h, hs[t]);
        }
        assert_eq!(state.c, fin.c);
    }
}
