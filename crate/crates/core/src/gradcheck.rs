//! Central finite-difference gradient oracle.
//!
//! Every backward pass in the crate is tested against this module.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    pub tol: f64,
    pub passed: bool,
}

/// `|a - b| / max(|a|, |b|, 1e-8)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares `analytic` against `(f(p + eps e_k) - f(p - eps e_k)) / 2 eps`
/// for every coordinate `k` of `p`.
pub fn grad_check<F>(
    mut f: F,
    p: &Tensor,
    analytic: &Tensor,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&Tensor) -> f64,
{
    if !p.same_shape(analytic) {
        return Err(Error::Shape(format!(
            "gradient {:?} for parameter {:?}",
            analytic.shape(),
            p.shape()
        )));
    }
    let mut probe = p.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic_at_worst: analytic.data()[0],
        numeric_at_worst: f64::NAN,
        checked: 0,
        tol,
        passed: true,
    };
    for k in 0..p.len() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + eps;
        let plus = f(&probe);
        probe.data_mut()[k] = orig - eps;
        let minus = f(&probe);
        probe.data_mut()[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("objective at coordinate {k}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.data()[k];
        let rel = relative_error(a, numeric);
        if k == 0 || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = k;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
        report.checked += 1;
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn quadratic_is_exact_up_to_roundoff() {
        let mut rng = Rng::new(2);
        let p = rng.uniform_tensor(&[5, 3], 2.0);
        let g = p.map(|v| 2.0 * v);
        let r = grad_check(|q| q.sum_squares(), &p, &g, 1e-5, 1e-4).unwrap();
        assert!(r.passed);
        assert!(r.max_rel_error < 1e-6, "{}", r.max_rel_error);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let p = Tensor::vector(vec![1.0, -2.0, 3.0]).unwrap();
        let g = Tensor::zeros(&[3]).unwrap();
        let r = grad_check(|_| 7.5, &p, &g, 1e-5, 1e-4).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn wrong_gradient_fails() {
        let p = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let g = Tensor::vector(vec![2.0, 5.0]).unwrap();
        let r = grad_check(|q| q.sum_squares(), &p, &g, 1e-5, 1e-4).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let p = Tensor::vector(vec![0.0]).unwrap();
        let g = Tensor::vector(vec![0.0]).unwrap();
        let r = grad_check(|q| q.data()[0].ln(), &p, &g, 1e-5, 1e-4);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
