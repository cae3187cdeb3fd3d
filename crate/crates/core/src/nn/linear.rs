//! Fully connected layer, ReLU, and MSE loss.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Affine layer parameters (also reused as gradient buffers).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// out x in weights.
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        LinearParams { w: Matrix::zeros(output, input), b: vec![0.0; output] }
    }

    /// Uniform(-k, k) with k = 1/sqrt(fan_in); zero bias.
    pub fn init(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = LinearParams::zeros(input, output);
        let k = 1.0 / (input as f64).sqrt();
        for v in p.w.data_mut() {
            *v = rng.random_range(-k..k);
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.w.data().len() + self.b.len()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    /// y = W·x + b
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.w.cols() {
            return Err(Error::ShapeMismatch(format!(
                "linear input {} vs declared {}",
                x.len(),
                self.w.cols()
            )));
        }
        let mut y = self.b.clone();
        self.w.matvec_add(x, &mut y);
        Ok(y)
    }

    /// Accumulates parameter gradients for one sample and returns dLoss/dx.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut LinearParams) -> Vec<f64> {
        grads.w.add_outer(dy, x);
        for (gb, &d) in grads.b.iter_mut().zip(dy) {
            *gb += d;
        }
        let mut dx = vec![0.0; self.w.cols()];
        self.w.tvec_add(dy, &mut dx);
        dx
    }
}

/// Elementwise max(0, x).
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

/// dLoss/dx given the pre-activation input and dLoss/dy.
pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter().zip(dy).map(|(&v, &d)| if v > 0.0 { d } else { 0.0 }).collect()
}

/// Mean squared error.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "mse over {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn identity_weights_pass_through() {
        let mut p = LinearParams::zeros(3, 3);
        for i in 0..3 {
            p.w.set(i, i, 1.0);
        }
        let y = p.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(y, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn relu_clamps() {
        assert_eq!(relu(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(relu_backward(&[-1.0, 2.0], &[5.0, 5.0]), vec![0.0, 5.0]);
    }

    #[test]
    fn linear_vs_scalar_loop() {
        let mut rng = rng_for(11, &["linear-test"]);
        let p = LinearParams::init(5, 3, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = p.forward(&x).unwrap();
        for r in 0..3 {
            let mut s = p.b[r];
            for c in 0..5 {
                s += p.w.get(r, c) * x[c];
            }
            assert!((y[r] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_backward_closed_form() {
        // single layer: dL/dW = dy ⊗ x, dL/db = dy, dx = Wᵀ dy
        let mut rng = rng_for(12, &["linear-test"]);
        let p = LinearParams::init(2, 2, &mut rng);
        let x = [0.5, -1.5];
        let dy = [2.0, -3.0];
        let mut grads = LinearParams::zeros(2, 2);
        let dx = p.backward(&x, &dy, &mut grads);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(grads.w.get(r, c), dy[r] * x[c]);
            }
            assert_eq!(grads.b[r], dy[r]);
        }
        for c in 0..2 {
            let want = p.w.get(0, c) * dy[0] + p.w.get(1, c) * dy[1];
            assert!((dx[c] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let got = mse_loss(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((got - 5.0 / 3.0).abs() < 1e-15);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }
}
