use super::{check_measurements, scatter, top_k, RecoveryResult, SolverConfig};
use crate::linalg::least_squares;
use crate::sensing::LinearOperator;
use crate::{CVector, Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Subspace pursuit with known sparsity `k`.
///
/// Starts from the `k` columns best correlated with `y`. Each iteration
/// merges in the `k` columns best correlated with the residual, fits by
/// least squares, keeps the `k` largest coefficients and refits. Stops when
/// the support repeats, when the residual stops decreasing (the previous
/// support is kept), or after `config.max_iter` iterations.
pub fn subspace_pursuit<A: LinearOperator + ?Sized>(
    phi: &A,
    y: &CVector,
    k: usize,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    check_measurements(phi, y)?;
    config.validate()?;
    if k == 0 || 2 * k > phi.nrows() || k > phi.ncols() {
        return Err(Error::Precondition(format!(
            "subspace pursuit needs 1 ≤ k and 2k ≤ N; got k = {k}, N = {}",
            phi.nrows()
        )));
    }
    let ncols = phi.ncols();
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(RecoveryResult::zero(ncols));
    }

    let mut support = largest(&phi.apply_adjoint(y), k);
    let (mut coeffs, mut residual) = fit(phi, y, &support, 0, Vec::new())?;
    let mut history = vec![residual.norm()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let mut merged = support.clone();
        for j in largest(&phi.apply_adjoint(&residual), k) {
            if !merged.contains(&j) {
                merged.push(j);
            }
        }
        merged.sort_unstable();
        let (wide, _) = fit(phi, y, &merged, iterations, history.clone())?;
        let mags: Vec<f64> = wide.iter().map(|c| c.norm()).collect();
        let mut next: Vec<usize> = top_k(&mags, k).into_iter().map(|i| merged[i]).collect();
        next.sort_unstable();
        if next == support {
            converged = true;
            break;
        }
        let (next_coeffs, next_residual) = fit(phi, y, &next, iterations, history.clone())?;
        if next_residual.norm() >= residual.norm() {
            converged = true;
            break;
        }
        support = next;
        coeffs = next_coeffs;
        residual = next_residual;
        history.push(residual.norm());
        if residual.norm() <= config.residual_tol * y_norm {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        x_hat: scatter(ncols, &support, &coeffs),
        residual_norm: residual.norm(),
        support,
        iterations,
        converged,
        history,
    })
}

/// Sorted indices of the `k` largest magnitudes of `v`.
fn largest(v: &CVector, k: usize) -> Vec<usize> {
    let mags: Vec<f64> = v.iter().map(|c| c.norm()).collect();
    let mut idx = top_k(&mags, k);
    idx.sort_unstable();
    idx
}

fn fit<A: LinearOperator + ?Sized>(
    phi: &A,
    y: &CVector,
    support: &[usize],
    iterations: usize,
    history: Vec<f64>,
) -> Result<(CVector, CVector)> {
    least_squares(&phi.columns(support), y, RANK_TOL).ok_or_else(|| Error::RankDeficient {
        partial: Box::new(RecoveryResult {
            x_hat: CVector::zeros(phi.ncols()),
            support: support.to_vec(),
            residual_norm: y.norm(),
            iterations,
            converged: false,
            history,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{build_phi, SensingMatrix};
    use crate::signal_model::{add_noise_with, sample_codes, CodeDistribution, RadarParams, Scene};
    use crate::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, m: usize, seed: u64) -> SensingMatrix {
        let codes = sample_codes(seed, CodeDistribution::Discrete { n_codes: m }, n).unwrap();
        build_phi(&RadarParams::grid(n, m), &codes).unwrap()
    }

    #[test]
    fn single_atom_is_exact() {
        let phi = setup(64, 8, 11);
        let gamma = C64::new(-0.4, 0.9);
        let y = phi.column(300) * gamma;
        let res = subspace_pursuit(&phi, &y, 1, &SolverConfig::default()).unwrap();
        assert_eq!(res.support, vec![300]);
        assert!((res.x_hat[300] - gamma).norm() < 1e-9);
    }

    #[test]
    fn stable_support_is_a_fixed_point() {
        let phi = setup(64, 8, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let scene = Scene::random_on_grid(&mut rng, 64, 8, 3).unwrap();
        let y = add_noise_with(&phi.apply(&scene.to_vector(64, 8).unwrap()), 0.05, &mut rng).unwrap();
        let first = subspace_pursuit(&phi, &y, 3, &SolverConfig::default()).unwrap();
        assert!(first.converged);
        let longer = SolverConfig {
            max_iter: first.iterations + 50,
            ..SolverConfig::default()
        };
        let again = subspace_pursuit(&phi, &y, 3, &longer).unwrap();
        assert_eq!(first, again);
    }

    #[test]
    fn least_squares_residual_is_orthogonal_to_support() {
        let phi = setup(64, 8, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let scene = Scene::random_on_grid(&mut rng, 64, 8, 4).unwrap();
        let y = add_noise_with(&phi.apply(&scene.to_vector(64, 8).unwrap()), 0.1, &mut rng).unwrap();
        let res = subspace_pursuit(&phi, &y, 4, &SolverConfig::default()).unwrap();
        let r = &y - phi.apply(&res.x_hat);
        let corr = phi.columns(&res.support).ad_mul(&r);
        assert!(corr.iter().all(|c| c.norm() <= 1e-8 * y.norm()));
    }

    #[test]
    fn rejects_oversized_k() {
        let phi = setup(8, 2, 0);
        let y = phi.column(0);
        assert!(matches!(
            subspace_pursuit(&phi, &y, 5, &SolverConfig::default()),
            Err(Error::Precondition(_))
        ));
    }
}
