use super::{check_measurements, extract_support, l1_norm, soft_threshold, RecoveryResult, SolverConfig};
use crate::sensing::LinearOperator;
use crate::{CVector, Error, Result, C64};

/// `min ½‖y − Φx‖₂² + λ‖x‖₁` by FISTA with step `1/L`, `L = λ_max(ΦΦᴴ)`.
///
/// Momentum is reset whenever the objective would increase, and such a step
/// is rejected. Converged once an accepted step changes the objective by
/// less than `residual_tol` relative to its value.
pub fn lasso<A: LinearOperator + ?Sized>(phi: &A, y: &CVector, lambda: f64, config: &SolverConfig) -> Result<RecoveryResult> {
    check_measurements(phi, y)?;
    config.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda = {lambda} must be finite and non-negative")));
    }
    let ncols = phi.ncols();
    if y.norm() == 0.0 {
        return Ok(RecoveryResult::zero(ncols));
    }
    let lipschitz = lipschitz_constant(phi);
    let step = 1.0 / lipschitz;
    let objective = |x: &CVector, ax: &CVector| 0.5 * (y - ax).norm_squared() + lambda * l1_norm(x);

    let mut x = CVector::zeros(ncols);
    let mut fx = objective(&x, &CVector::zeros(y.len()));
    let mut v = x.clone();
    let mut t: f64 = 1.0;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let grad = phi.apply_adjoint(&(phi.apply(&v) - y));
        let x_new = soft_threshold(&(&v - grad * C64::new(step, 0.0)), lambda * step);
        let f_new = objective(&x_new, &phi.apply(&x_new));
        if f_new > fx {
            t = 1.0;
            v = x.clone();
            history.push(fx);
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        v = &x_new + (&x_new - &x) * C64::new((t - 1.0) / t_new, 0.0);
        t = t_new;
        let change = fx - f_new;
        x = x_new;
        fx = f_new;
        history.push(fx);
        if change <= config.residual_tol * fx.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let residual_norm = (y - phi.apply(&x)).norm();
    Ok(RecoveryResult {
        support: extract_support(&x, config.k, config.support_eps),
        x_hat: x,
        residual_norm,
        iterations,
        converged,
        history,
    })
}

/// Largest eigenvalue of `ΦΦᴴ`.
fn lipschitz_constant<A: LinearOperator + ?Sized>(phi: &A) -> f64 {
    let dense = phi.to_dense();
    let gram = &dense * dense.adjoint();
    gram.symmetric_eigenvalues().iter().copied().fold(f64::MIN_POSITIVE, f64::max)
}
