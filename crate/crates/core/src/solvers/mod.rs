//! Sparse recovery of the scene vector `x` from echoes `y = Φx (+ noise)`.
//!
//! All solvers take any [`LinearOperator`], are single threaded and
//! deterministic, and break ties toward the lowest column index.

mod basis_pursuit;
mod l0;
mod lasso;
mod omp;
mod subspace_pursuit;

pub use basis_pursuit::basis_pursuit;
pub use l0::{l0_oracle, DEFAULT_L0_BUDGET};
pub use lasso::lasso;
pub use omp::omp;
pub use subspace_pursuit::subspace_pursuit;

use serde::{Deserialize, Serialize};

use crate::sensing::LinearOperator;
use crate::{CVector, Error, Result, C64};

/// Support threshold for noiseless recovery.
pub const NOISELESS_SUPPORT_EPS: f64 = 1e-2;
/// Support threshold for noisy recovery.
pub const NOISY_SUPPORT_EPS: f64 = 0.2;

/// Output of a recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Estimate of length `NM`.
    pub x_hat: CVector,
    /// Selected column indices, ascending.
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖y − Φx‖₂` after each iteration (greedy solvers) or the objective
    /// value after each iteration (iterative solvers).
    pub history: Vec<f64>,
}

impl RecoveryResult {
    fn zero(ncols: usize) -> Self {
        Self {
            x_hat: CVector::zeros(ncols),
            support: Vec::new(),
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
            history: Vec::new(),
        }
    }
}

/// Tuning shared by the solvers. Fields a solver does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Greedy and basis pursuit: relative residual `‖y − Φx‖ / ‖y‖`.
    /// Lasso: relative objective change between iterations.
    pub residual_tol: f64,
    /// Lasso penalty weight.
    pub lambda: f64,
    /// Magnitudes at or below this are dropped from the support.
    pub support_eps: f64,
    /// Known sparsity.
    pub k: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            residual_tol: 1e-8,
            lambda: 0.0,
            support_eps: NOISELESS_SUPPORT_EPS,
            k: None,
        }
    }
}

impl SolverConfig {
    /// OMP stopping after `k` atoms or at `residual_tol`.
    pub fn omp(k: Option<usize>) -> Self {
        Self {
            max_iter: 50,
            k,
            ..Self::default()
        }
    }

    pub fn basis_pursuit() -> Self {
        Self {
            max_iter: 20_000,
            residual_tol: 1e-8,
            ..Self::default()
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self {
            max_iter: 20_000,
            residual_tol: 1e-6,
            lambda,
            support_eps: NOISY_SUPPORT_EPS,
            k: None,
        }
    }

    pub fn with_k(mut self, k: Option<usize>) -> Self {
        self.k = k;
        self
    }

    pub fn with_support_eps(mut self, eps: f64) -> Self {
        self.support_eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config(format!("residual_tol = {} must be positive", self.residual_tol)));
        }
        if !(self.support_eps > 0.0) {
            return Err(Error::Config(format!("support_eps = {} must be positive", self.support_eps)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda = {} must be finite and non-negative", self.lambda)));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1 when given".into()));
        }
        Ok(())
    }
}

/// Indices of the `k` largest magnitudes (all if `k` is `None`) that exceed
/// `eps`, in ascending order.
pub fn extract_support(x_hat: &CVector, k: Option<usize>, eps: f64) -> Vec<usize> {
    let mags: Vec<f64> = x_hat.iter().map(|v| v.norm()).collect();
    let mut out: Vec<usize> = match k {
        Some(k) => top_k(&mags, k),
        None => (0..mags.len()).collect(),
    };
    out.retain(|&i| mags[i] > eps);
    out.sort_unstable();
    out
}

/// `Φᴴ y`, unnormalized.
pub fn matched_filter<A: LinearOperator + ?Sized>(phi: &A, y: &CVector) -> Result<CVector> {
    check_measurements(phi, y)?;
    Ok(phi.apply_adjoint(y))
}

/// Whether two supports are the same set.
pub fn same_support(a: &[usize], b: &[usize]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

pub(crate) fn check_measurements<A: LinearOperator + ?Sized>(phi: &A, y: &CVector) -> Result<()> {
    if y.len() != phi.nrows() {
        return Err(Error::shape(
            format!("{} measurements", phi.nrows()),
            format!("{} measurements", y.len()),
        ));
    }
    Ok(())
}

/// Indices of the `k` largest values, largest first; equal values keep
/// index order.
pub(crate) fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Complex soft threshold: shrink each magnitude by `t`, keep the phase.
pub(crate) fn soft_threshold(v: &CVector, t: f64) -> CVector {
    v.map(|c| {
        let r = c.norm();
        if r <= t {
            C64::new(0.0, 0.0)
        } else {
            c * ((r - t) / r)
        }
    })
}

pub(crate) fn l1_norm(v: &CVector) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}

/// Scatter `coeffs` into a length-`n` vector at `support`.
pub(crate) fn scatter(n: usize, support: &[usize], coeffs: &CVector) -> CVector {
    let mut x = CVector::zeros(n);
    for (&j, &c) in support.iter().zip(coeffs.iter()) {
        x[j] = c;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(values: &[f64]) -> CVector {
        CVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)))
    }

    #[test]
    fn extract_support_examples() {
        let x = cv(&[3.0, 0.001, 2.0]);
        assert_eq!(extract_support(&x, Some(2), 1e-2), vec![0, 2]);
        assert_eq!(extract_support(&x, None, 1e-2), vec![0, 2]);
        assert!(extract_support(&cv(&[1e-3, -1e-3]), None, 1e-2).is_empty());
        assert_eq!(extract_support(&cv(&[0.0, 5.0, 0.0]), Some(3), 1e-2), vec![1]);
    }

    #[test]
    fn extract_support_ties_prefer_low_index() {
        let x = cv(&[1.0, 2.0, 2.0, 2.0]);
        assert_eq!(extract_support(&x, Some(2), 1e-2), vec![1, 2]);
    }

    #[test]
    fn soft_threshold_keeps_phase() {
        let v = CVector::from_vec(vec![C64::new(3.0, 4.0), C64::new(0.1, 0.0)]);
        let s = soft_threshold(&v, 1.0);
        assert!((s[0] - C64::new(2.4, 3.2)).norm() < 1e-15);
        assert_eq!(s[1], C64::new(0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { max_iter: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { residual_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::default().with_k(Some(0)).validate().is_err());
    }
}
