use super::{check_measurements, scatter, RecoveryResult};
use crate::linalg::{binomial, least_squares, Combinations};
use crate::sensing::LinearOperator;
use crate::{CVector, Error, Result};

/// Default cap on least-squares fits for [`l0_oracle`].
pub const DEFAULT_L0_BUDGET: u64 = 1_000_000;

const FIT_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

/// Exhaustive `ℓ₀` search: the smallest support (lexicographically first
/// among equal sizes) whose least-squares residual is at most `1e-9 ‖y‖`.
///
/// If no support up to `k_max` fits, the best size-`k_max` support is
/// returned with `converged = false`.
pub fn l0_oracle<A: LinearOperator + ?Sized>(phi: &A, y: &CVector, k_max: usize, budget: u64) -> Result<RecoveryResult> {
    check_measurements(phi, y)?;
    let ncols = phi.ncols();
    let fits: u128 = (1..=k_max).map(|k| binomial(ncols, k)).fold(0u128, |a, b| a.saturating_add(b));
    if fits > budget as u128 {
        return Err(Error::Resource(format!(
            "{fits} least-squares fits over {ncols} columns up to k = {k_max} exceed the budget {budget}"
        )));
    }
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(RecoveryResult::zero(ncols));
    }
    let dense = phi.to_dense();
    let tol = FIT_TOL * y_norm;
    let mut iterations = 0;
    let mut best: Option<(f64, Vec<usize>, CVector)> = None;

    for k in 1..=k_max.min(ncols) {
        let mut found = None;
        let mut iter = Combinations::new(ncols, k);
        for subset in iter.by_ref() {
            iterations += 1;
            let sub = dense.select_columns(&subset);
            let Some((coeffs, residual)) = least_squares(&sub, y, RANK_TOL) else {
                continue;
            };
            let r = residual.norm();
            if r <= tol {
                found = Some((r, subset, coeffs));
                break;
            }
            if k == k_max && best.as_ref().is_none_or(|(b, _, _)| r < *b) {
                best = Some((r, subset, coeffs));
            }
        }
        if let Some((r, support, coeffs)) = found {
            return Ok(RecoveryResult {
                x_hat: scatter(ncols, &support, &coeffs),
                support,
                residual_norm: r,
                iterations,
                converged: true,
                history: Vec::new(),
            });
        }
    }

    let (r, support, coeffs) = best.unwrap_or((y_norm, Vec::new(), CVector::zeros(0)));
    Ok(RecoveryResult {
        x_hat: scatter(ncols, &support, &coeffs),
        support,
        residual_norm: r,
        iterations,
        converged: false,
        history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::build_phi;
    use crate::signal_model::{sample_codes, CodeDistribution, RadarParams};
    use crate::solvers::{matched_filter, top_k};
    use crate::C64;

    #[test]
    fn recovers_planted_pair_with_continuous_codes() {
        let codes = sample_codes(41, CodeDistribution::Continuous, 4).unwrap();
        let phi = build_phi(&RadarParams::grid(4, 2), &codes).unwrap();
        let x = scatter(8, &[2, 7], &CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 1.0)]));
        let y = phi.apply(&x);
        let res = l0_oracle(&phi, &y, 2, DEFAULT_L0_BUDGET).unwrap();
        assert!(res.converged);
        assert_eq!(res.support, vec![2, 7]);
        assert!((&res.x_hat - &x).norm() < 1e-8);
    }

    #[test]
    fn single_atom_matches_matched_filter() {
        let codes = sample_codes(42, CodeDistribution::Continuous, 4).unwrap();
        let phi = build_phi(&RadarParams::grid(4, 2), &codes).unwrap();
        let y = phi.column(5) * C64::new(0.0, 2.0);
        let res = l0_oracle(&phi, &y, 2, DEFAULT_L0_BUDGET).unwrap();
        let mf: Vec<f64> = matched_filter(&phi, &y).unwrap().iter().map(|c| c.norm()).collect();
        assert_eq!(res.support, top_k(&mf, 1));
    }

    #[test]
    fn zero_measurements_and_budget() {
        let codes = sample_codes(43, CodeDistribution::Continuous, 4).unwrap();
        let phi = build_phi(&RadarParams::grid(4, 2), &codes).unwrap();
        assert!(l0_oracle(&phi, &CVector::zeros(4), 2, DEFAULT_L0_BUDGET).unwrap().support.is_empty());
        assert!(matches!(l0_oracle(&phi, &phi.column(0), 2, 10), Err(Error::Resource(_))));
    }
}
