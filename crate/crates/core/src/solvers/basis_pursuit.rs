use nalgebra::Cholesky;

use super::{check_measurements, extract_support, l1_norm, soft_threshold, RecoveryResult, SolverConfig};
use crate::sensing::LinearOperator;
use crate::{CMatrix, CVector, Error, Result, C64};

const RHO_PERIOD: usize = 10;
const RHO_ADAPT_UNTIL: usize = 2000;
const RHO_RATIO: f64 = 10.0;
const RHO_STEP: f64 = 2.0;

/// `min ‖x‖₁ subject to Φx = y` by ADMM.
///
/// The iterates split into a feasible `x` (projection onto `Φx = y`) and a
/// sparse `z` (complex soft threshold). The penalty `ρ` is rebalanced
/// whenever the primal and dual residuals drift more than a factor 10
/// apart. The returned estimate is the projection of the final `z`, so it
/// satisfies the constraint to rounding error.
pub fn basis_pursuit<A: LinearOperator + ?Sized>(
    phi: &A,
    y: &CVector,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    check_measurements(phi, y)?;
    config.validate()?;
    let ncols = phi.ncols();
    if y.norm() == 0.0 {
        return Ok(RecoveryResult::zero(ncols));
    }
    let proj = Projector::new(phi, y)?;
    let tol = config.residual_tol;

    let mut z = proj.apply(&phi.apply_adjoint(y), phi);
    // Start with a threshold at a tenth of the least-norm solution's peak.
    let peak = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut rho = 10.0 / peak;
    let mut u = CVector::zeros(ncols);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let x = proj.apply(&(&z - &u), phi);
        let z_old = std::mem::replace(&mut z, soft_threshold(&(&x + &u), 1.0 / rho));
        u += &x - &z;
        history.push(l1_norm(&x));

        let primal = (&x - &z).norm();
        let dual = rho * (&z - &z_old).norm();
        let scale = x.norm().max(z.norm()).max(f64::MIN_POSITIVE);
        if primal <= tol * scale && dual <= tol * (rho * u.norm()).max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if iterations % RHO_PERIOD != 0 || iterations > RHO_ADAPT_UNTIL {
            continue;
        }
        if primal > RHO_RATIO * dual {
            rho *= RHO_STEP;
            u /= C64::new(RHO_STEP, 0.0);
        } else if dual > RHO_RATIO * primal {
            rho /= RHO_STEP;
            u *= C64::new(RHO_STEP, 0.0);
        }
    }

    let x_hat = proj.apply(&z, phi);
    let residual_norm = (y - phi.apply(&x_hat)).norm();
    Ok(RecoveryResult {
        support: extract_support(&x_hat, config.k, config.support_eps),
        x_hat,
        residual_norm,
        iterations,
        converged,
        history,
    })
}

/// Orthogonal projection onto `{x : Φx = y}` through a Cholesky factor of
/// `ΦΦᴴ`.
struct Projector {
    chol: Cholesky<C64, nalgebra::Dyn>,
    y: CVector,
}

impl Projector {
    fn new<A: LinearOperator + ?Sized>(phi: &A, y: &CVector) -> Result<Self> {
        let dense: CMatrix = phi.to_dense();
        let gram = &dense * dense.adjoint();
        let chol = Cholesky::new(gram)
            .ok_or_else(|| Error::Precondition("Φ must have full row rank for basis pursuit".into()))?;
        Ok(Self { chol, y: y.clone() })
    }

    fn apply<A: LinearOperator + ?Sized>(&self, v: &CVector, phi: &A) -> CVector {
        let mismatch = phi.apply(v) - &self.y;
        v - phi.apply_adjoint(&self.chol.solve(&mismatch))
    }
}
