//! Gradient verification against central finite differences.

/// Worst-offender report from a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub params_checked: usize,
}

// Relative-error denominator floor: keeps noise on near-zero gradients from
// dominating the report.
const REL_FLOOR: f64 = 1e-6;

/// Compares `analytic` against central differences of `loss` at `theta`,
/// perturbing one coordinate at a time by `eps`. `name_of` maps a flat index
/// to a layer-qualified name for the report. `theta` is restored on return.
pub fn grad_check_fn(
    theta: &mut [f64],
    analytic: &[f64],
    eps: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
    name_of: impl Fn(usize) -> String,
) -> GradCheckReport {
    assert_eq!(theta.len(), analytic.len());
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        params_checked: theta.len(),
    };
    for k in 0..theta.len() {
        let orig = theta[k];
        theta[k] = orig + eps;
        let up = loss(theta);
        theta[k] = orig - eps;
        let down = loss(theta);
        theta[k] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_param = name_of(k);
            report.worst_index = k;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_checks_to_machine_precision() {
        // f(theta) = sum theta_i^2, grad = 2 theta
        let mut theta = vec![0.5, -1.5, 2.0];
        let analytic: Vec<f64> = theta.iter().map(|t| 2.0 * t).collect();
        let report = grad_check_fn(
            &mut theta,
            &analytic,
            1e-5,
            |t| t.iter().map(|v| v * v).sum(),
            |k| format!("theta[{k}]"),
        );
        assert!(report.max_rel_err < 1e-8, "rel err {}", report.max_rel_err);
        assert_eq!(theta, vec![0.5, -1.5, 2.0]); // restored
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let mut theta = vec![1.0];
        let analytic = vec![5.0]; // true gradient is 2.0
        let report =
            grad_check_fn(&mut theta, &analytic, 1e-5, |t| t[0] * t[0], |_| "theta".into());
        assert!(report.max_rel_err > 0.1);
    }
}
