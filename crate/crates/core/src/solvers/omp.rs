use super::{check_measurements, scatter, RecoveryResult, SolverConfig};
use crate::linalg::IncrementalQr;
use crate::sensing::LinearOperator;
use crate::{CVector, Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Orthogonal matching pursuit.
///
/// Each iteration adds the column most correlated with the residual and
/// refits all selected coefficients by least squares. Stops after
/// `config.k` atoms, when `‖r‖ ≤ residual_tol · ‖y‖`, or after
/// `config.max_iter` iterations.
pub fn omp<A: LinearOperator + ?Sized>(phi: &A, y: &CVector, config: &SolverConfig) -> Result<RecoveryResult> {
    check_measurements(phi, y)?;
    config.validate()?;
    let ncols = phi.ncols();
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(RecoveryResult::zero(ncols));
    }
    let target = config.k.unwrap_or(phi.nrows()).min(phi.nrows()).min(ncols);
    let tol = config.residual_tol * y_norm;

    let mut qr = IncrementalQr::new(phi.nrows(), RANK_TOL);
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; ncols];
    let mut residual = y.clone();
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < config.max_iter && residual.norm() > tol && support.len() < target {
        iterations += 1;
        let corr = phi.apply_adjoint(&residual);
        let mut best = None;
        let mut best_mag = -1.0;
        for (j, c) in corr.iter().enumerate() {
            let mag = c.norm();
            if !selected[j] && mag > best_mag {
                best_mag = mag;
                best = Some(j);
            }
        }
        let j = match best {
            Some(j) => j,
            None => break,
        };
        if !qr.push(&phi.column(j)) {
            let coeffs = qr.solve(y);
            let mut sorted = support.clone();
            let x_hat = scatter(ncols, &support, &coeffs);
            sorted.sort_unstable();
            return Err(Error::RankDeficient {
                partial: Box::new(RecoveryResult {
                    x_hat,
                    support: sorted,
                    residual_norm: residual.norm(),
                    iterations,
                    converged: false,
                    history,
                }),
            });
        }
        support.push(j);
        selected[j] = true;
        residual = qr.residual(y);
        history.push(residual.norm());
    }
    let converged = residual.norm() <= tol || support.len() >= target;
    let coeffs = qr.solve(y);
    let x_hat = scatter(ncols, &support, &coeffs);
    support.sort_unstable();
    Ok(RecoveryResult {
        x_hat,
        support,
        residual_norm: residual.norm(),
        iterations,
        converged,
        history,
    })
}
