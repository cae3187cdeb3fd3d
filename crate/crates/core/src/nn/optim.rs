//! Optimizers over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::InvalidSpec(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Adaptive-moment state: first/second moment buffers mirroring the flat
/// parameter vector, plus the step counter for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One update with bias correction. Deterministic: pure elementwise math.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam buffers {} vs params {} vs grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[k] / bc1;
            let vhat = self.v[k] / bc2;
            params[k] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Plain gradient step.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch(format!(
            "sgd params {} vs grads {}",
            params.len(),
            grads.len()
        )));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}
