//! Sensing-matrix diagnostics and closed-form recovery bounds.
//!
//! With `ζ ≡ 1` the Gram entry between columns `(m₁, l₁)` and `(m₂, l₂)`
//! depends only on `(m₂ − m₁, l₂ − l₁ mod N)`, so every row of `|ΦᴴΦ|` is a
//! permutation of the first. The mutual coherence therefore reduces to the
//! maximum of `|χ_l| = |Φ₀ᴴ Φ_l| / N` over the columns with `m ≠ 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{binomial, jacobi_min_singular_value_in_place, singular_values, Combinations};
use crate::sensing::{LinearOperator, SensingMatrix};
use crate::signal_model::{cis_turns, BandwidthMode, FrequencyCodes};
use crate::{CMatrix, Error, Result, C64};

/// Rank-deficiency threshold on normalized singular values.
pub const DEFAULT_EPS_SVD: f64 = 1e-15;
/// Largest number of submatrices [`spark_enumeration`] visits by default.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Minimum singular values of `N × N` column submatrices of `Φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparkReport {
    /// `σ_N / √N` for each visited submatrix, in visiting order.
    pub sigma_n_values: Vec<f64>,
    /// Minimum over `sigma_n_values`.
    pub sigma_omega: f64,
    pub n_submatrices: u64,
    pub threshold_eps: f64,
    /// Number of `sigma_n_values` strictly below `threshold_eps`.
    pub n_below_threshold: u64,
    /// Whether every `N`-subset of columns was visited.
    pub exhaustive: bool,
}

impl SparkReport {
    /// Fraction of submatrices below the threshold.
    pub fn fraction_below(&self) -> f64 {
        if self.n_submatrices == 0 {
            0.0
        } else {
            self.n_below_threshold as f64 / self.n_submatrices as f64
        }
    }

    /// Whether some visited submatrix is numerically singular.
    pub fn is_deficient(&self) -> bool {
        self.sigma_omega < self.threshold_eps
    }
}

/// Smallest singular value of a square matrix divided by `√N`.
pub fn min_singular_normalized(a: &CMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::shape("square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::shape("non-empty matrix", "0x0"));
    }
    let s = singular_values(a);
    Ok(s[n - 1] / (n as f64).sqrt())
}

/// Visit every `N`-column submatrix of `Φ` in lexicographic order and record
/// its normalized minimum singular value.
pub fn spark_enumeration(phi: &SensingMatrix, eps_svd: f64, budget: u64) -> Result<SparkReport> {
    let n = phi.n_pulses();
    let total = binomial(phi.ncols(), n);
    if total > budget as u128 {
        return Err(Error::Resource(format!(
            "C({}, {n}) = {total} submatrices exceed the enumeration budget {budget}; use spark_sampling",
            phi.ncols()
        )));
    }
    let dense = phi.dense();
    let mut values = Vec::with_capacity(total as usize);
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    let scale = (n as f64).sqrt();
    Combinations::new(phi.ncols(), n).for_each_subset(|subset| {
        values.push(submatrix_sigma(&dense, subset, &mut buf) / scale);
    });
    Ok(summarize(values, eps_svd, true))
}

/// Like [`spark_enumeration`] but over `n_samples` uniformly random
/// `N`-subsets, for matrices too large to enumerate.
pub fn spark_sampling(phi: &SensingMatrix, eps_svd: f64, n_samples: usize, seed: u64) -> Result<SparkReport> {
    let n = phi.n_pulses();
    if n_samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = phi.dense();
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    let scale = (n as f64).sqrt();
    let values = (0..n_samples)
        .map(|_| {
            let mut subset = rand::seq::index::sample(&mut rng, phi.ncols(), n).into_vec();
            subset.sort_unstable();
            submatrix_sigma(&dense, &subset, &mut buf) / scale
        })
        .collect();
    Ok(summarize(values, eps_svd, false))
}

fn submatrix_sigma(dense: &CMatrix, subset: &[usize], buf: &mut [C64]) -> f64 {
    let rows = dense.nrows();
    for (k, &j) in subset.iter().enumerate() {
        buf[k * rows..(k + 1) * rows].copy_from_slice(dense.column(j).as_slice());
    }
    jacobi_min_singular_value_in_place(buf, rows, subset.len())
}

fn summarize(values: Vec<f64>, eps: f64, exhaustive: bool) -> SparkReport {
    let sigma_omega = values.iter().copied().fold(f64::INFINITY, f64::min);
    let below = values.iter().filter(|&&v| v < eps).count() as u64;
    SparkReport {
        n_submatrices: values.len() as u64,
        sigma_n_values: values,
        sigma_omega,
        threshold_eps: eps,
        n_below_threshold: below,
        exhaustive,
    }
}

/// Mutual coherence of one sensing matrix realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSample {
    pub mu: f64,
    /// `|χ_l|` for `l = N … NM − 1` (first-row path only).
    pub chi_values: Option<Vec<f64>>,
}

fn grid_index(angle: f64, size: usize, what: &str) -> Result<usize> {
    let t = angle.rem_euclid(2.0 * PI) * size as f64 / (2.0 * PI);
    let k = t.round();
    if (t - k).abs() > 1e-9 {
        return Err(Error::Domain(format!("{what} = {angle} is not on the 2π/{size} grid")));
    }
    Ok(k as usize % size)
}

/// `χ = (1/N) Σ_n exp(j p M d_n + j q n)` for grid-valued `p ∈ 2πℤ/M`, `q ∈ 2πℤ/N`.
pub fn chi(codes: &FrequencyCodes, n_hrr_bins: usize, p: f64, q: f64) -> Result<C64> {
    let m = grid_index(p, n_hrr_bins, "p")?;
    let l = grid_index(q, codes.len(), "q")?;
    Ok(chi_grid(codes, m, l))
}

/// `χ` at grid indices `(m, l)`.
pub fn chi_grid(codes: &FrequencyCodes, m: usize, l: usize) -> C64 {
    let n_pulses = codes.len();
    let sum: C64 = (0..n_pulses)
        .map(|n| cis_turns(codes.hrr_turns(n, m) + ((l * n) % n_pulses) as f64 / n_pulses as f64))
        .sum();
    sum / n_pulses as f64
}

/// Mutual coherence of `Φ`.
///
/// In approximate mode the first Gram row is enough (`NM − N` values of
/// `|χ_l|`). In exact mode the Gram entry still depends only on the index
/// differences `(Δm, Δl)`, but without wrap-around in `Δl`, so all
/// `Δm ∈ [0, M)`, `Δl ∈ (−N, N)` are scanned.
pub fn coherence(phi: &SensingMatrix) -> CoherenceSample {
    match phi.mode() {
        BandwidthMode::Approximate => coherence_first_row(phi.codes(), phi.n_hrr_bins()),
        BandwidthMode::Exact => CoherenceSample {
            mu: coherence_difference_set(phi),
            chi_values: None,
        },
    }
}

/// First-row coherence for code realization `codes` with `ζ ≡ 1`.
pub fn coherence_first_row(codes: &FrequencyCodes, n_hrr_bins: usize) -> CoherenceSample {
    let n = codes.len();
    if n_hrr_bins <= 1 {
        return CoherenceSample {
            mu: 0.0,
            chi_values: Some(Vec::new()),
        };
    }
    let fourier: Vec<C64> = (0..n).map(|k| cis_turns(k as f64 / n as f64)).collect();
    let mut chis = Vec::with_capacity((n_hrr_bins - 1) * n);
    let mut hrr = vec![C64::new(0.0, 0.0); n];
    for m in 1..n_hrr_bins {
        for (i, h) in hrr.iter_mut().enumerate() {
            *h = cis_turns(codes.hrr_turns(i, m));
        }
        for l in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (i, h) in hrr.iter().enumerate() {
                acc += h * fourier[(l * i) % n];
            }
            chis.push(acc.norm() / n as f64);
        }
    }
    let mu = chis.iter().copied().fold(0.0, f64::max);
    CoherenceSample {
        mu,
        chi_values: Some(chis),
    }
}

fn coherence_difference_set(phi: &SensingMatrix) -> f64 {
    let n = phi.n_pulses();
    let m_bins = phi.n_hrr_bins();
    let codes = phi.codes();
    let zeta = phi.zetas();
    let mut best: f64 = 0.0;
    let mut hrr = vec![C64::new(0.0, 0.0); n];
    let mut dop = vec![C64::new(0.0, 0.0); n];
    for dm in 0..m_bins {
        for (i, h) in hrr.iter_mut().enumerate() {
            *h = cis_turns(codes.hrr_turns(i, dm));
        }
        let dl_range: Box<dyn Iterator<Item = i64>> = if dm == 0 {
            Box::new(1..n as i64)
        } else {
            Box::new(-(n as i64 - 1)..n as i64)
        };
        for dl in dl_range {
            for (i, d) in dop.iter_mut().enumerate() {
                let k = dl * i as i64;
                let base = k.rem_euclid(n as i64) as f64 / n as f64;
                *d = cis_turns(base + k as f64 * (zeta[i] - 1.0) / n as f64);
            }
            let acc: C64 = hrr.iter().zip(&dop).map(|(h, d)| h * d).sum();
            best = best.max(acc.norm() / n as f64);
        }
    }
    best
}

/// Coherence `max_{i≠k} |a_iᴴ a_k| / (‖a_i‖ ‖a_k‖)` of an arbitrary matrix
/// by forming the full Gram matrix.
pub fn coherence_all_pairs<A: LinearOperator + ?Sized>(a: &A) -> f64 {
    let dense = a.to_dense();
    let gram = dense.ad_mul(&dense);
    let norms: Vec<f64> = (0..gram.ncols()).map(|i| gram[(i, i)].re.sqrt()).collect();
    let mut mu: f64 = 0.0;
    for k in 0..gram.ncols() {
        for i in 0..k {
            let denom = norms[i] * norms[k];
            if denom > 0.0 {
                mu = mu.max(gram[(i, k)].norm() / denom);
            }
        }
    }
    mu
}

/// Modulus of the Gram matrix, `G[k, l] = |(ΦᴴΦ)[k, l]|`.
pub fn gram_modulus<A: LinearOperator + ?Sized>(a: &A) -> DMatrix<f64> {
    let dense = a.to_dense();
    dense.ad_mul(&dense).map(|v| v.norm())
}

/// Rayleigh tail bound `P(|χ| > ε) ≤ exp(−N ε² / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    /// Whether `N ε² > 2/π`, the regime in which the bound is established.
    pub condition_met: bool,
}

pub fn rayleigh_tail_bound(eps: f64, n_pulses: usize) -> Result<TailBound> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let ne2 = n_pulses as f64 * eps * eps;
    Ok(TailBound {
        value: (-ne2 / 2.0).exp(),
        condition_met: ne2 > 2.0 / PI,
    })
}

/// Union bound `P(μ > ε) ≤ (MN − N) exp(−N ε² / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnionBound {
    pub raw: f64,
    /// `min(raw, 1)`.
    pub clamped: f64,
}

pub fn union_bound(eps: f64, n_pulses: usize, n_hrr_bins: usize) -> Result<UnionBound> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps = {eps} must be finite and non-negative")));
    }
    if n_hrr_bins == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    let count = (n_pulses * (n_hrr_bins - 1)) as f64;
    let raw = count * (-(n_pulses as f64) * eps * eps / 2.0).exp();
    Ok(UnionBound {
        raw,
        clamped: raw.min(1.0),
    })
}

/// Largest `K` for which `μ < 1/(2K − 1)` holds with probability above
/// `1 − δ`:
///
/// `K ≤ (1 / 2√2) · √(N / (ln(MN − N) − ln δ)) + 1/2`
pub fn max_recoverable_k(n_pulses: usize, n_hrr_bins: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let count = n_pulses * n_hrr_bins.saturating_sub(1);
    if count < 2 {
        return Err(Error::Domain(format!(
            "N(M − 1) = {count} must be at least 2"
        )));
    }
    let denom = (count as f64).ln() - delta.ln();
    Ok((n_pulses as f64 / denom).sqrt() / (2.0 * 2f64.sqrt()) + 0.5)
}

/// Number of scatterers recoverable by ℓ₀ minimization when every `N`
/// columns are independent, `N / 2`.
pub fn l0_limit(n_pulses: usize) -> f64 {
    n_pulses as f64 / 2.0
}

/// Monte-Carlo moments of `χ` over fresh discrete code draws (`M* = M`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiStatistics {
    pub mean: C64,
    pub var_re: f64,
    pub var_im: f64,
    pub cov: f64,
    /// Sample mean of `|χ|²`.
    pub mean_abs_sq: f64,
    pub n_trials: usize,
    /// `p = q = π`, where `χ` is real.
    pub special_case: bool,
}

pub fn chi_statistics(
    n_pulses: usize,
    n_hrr_bins: usize,
    n_trials: usize,
    seed: u64,
    p: f64,
    q: f64,
) -> Result<ChiStatistics> {
    if n_trials < 2 {
        return Err(Error::Config("need at least two trials".into()));
    }
    if n_pulses == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    let m = grid_index(p, n_hrr_bins, "p")?;
    let l = grid_index(q, n_pulses, "q")?;
    if m == 0 {
        return Err(Error::Domain("p = 0 gives a deterministic χ".into()));
    }
    let special_case = 2 * m == n_hrr_bins && 2 * l == n_pulses;
    // exp(j 2π m k / M) for each code index k, and the Doppler phasors.
    let hrr: Vec<C64> = (0..n_hrr_bins)
        .map(|k| cis_turns(((m * k) % n_hrr_bins) as f64 / n_hrr_bins as f64))
        .collect();
    let dop: Vec<C64> = (0..n_pulses)
        .map(|n| cis_turns(((l * n) % n_pulses) as f64 / n_pulses as f64))
        .collect();
    let values: Vec<C64> = (0..n_trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let acc: C64 = dop.iter().map(|d| hrr[rng.random_range(0..n_hrr_bins)] * d).sum();
            acc / n_pulses as f64
        })
        .collect();
    let nt = n_trials as f64;
    let mean: C64 = values.iter().sum::<C64>() / nt;
    let (mut vr, mut vi, mut cv, mut msq) = (0.0, 0.0, 0.0, 0.0);
    for v in &values {
        let d = v - mean;
        vr += d.re * d.re;
        vi += d.im * d.im;
        cv += d.re * d.im;
        msq += v.norm_sqr();
    }
    Ok(ChiStatistics {
        mean,
        var_re: vr / (nt - 1.0),
        var_im: vi / (nt - 1.0),
        cov: cv / (nt - 1.0),
        mean_abs_sq: msq / nt,
        n_trials,
        special_case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{build_iwr_psi, build_phi, fourier_matrix};
    use crate::signal_model::{sample_codes, CodeDistribution, RadarParams};
    use crate::CVector;

    fn discrete_phi(n: usize, m: usize, seed: u64) -> SensingMatrix {
        let codes = sample_codes(seed, CodeDistribution::Discrete { n_codes: m }, n).unwrap();
        build_phi(&RadarParams::grid(n, m), &codes).unwrap()
    }

    #[test]
    fn min_singular_examples() {
        let eye = CMatrix::identity(5, 5);
        assert!((min_singular_normalized(&eye).unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        let mut rep = fourier_matrix(6);
        let c = rep.column(2).into_owned();
        rep.set_column(4, &c);
        assert!(min_singular_normalized(&rep).unwrap() < 1e-12);
        assert!((min_singular_normalized(&fourier_matrix(6)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            min_singular_normalized(&CMatrix::zeros(3, 4)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn enumeration_matches_reference_svd() {
        let phi = discrete_phi(4, 2, 7);
        let report = spark_enumeration(&phi, DEFAULT_EPS_SVD, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(report.n_submatrices, 70);
        assert!(report.exhaustive);
        let dense = phi.dense();
        for (subset, &got) in Combinations::new(8, 4).zip(&report.sigma_n_values) {
            let sub = dense.select_columns(&subset);
            let s = sub.svd(false, false).singular_values;
            let want = s.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
            assert!((got - want).abs() <= 1e-12, "{subset:?}: {got} vs {want}");
        }
    }

    #[test]
    fn single_bin_has_one_submatrix() {
        let phi = discrete_phi(6, 1, 0);
        let report = spark_enumeration(&phi, DEFAULT_EPS_SVD, 10).unwrap();
        assert_eq!(report.n_submatrices, 1);
        assert!((report.sigma_omega - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_codes_have_full_spark() {
        let codes = sample_codes(99, CodeDistribution::Continuous, 6).unwrap();
        let phi = build_phi(&RadarParams::grid(6, 3), &codes).unwrap();
        let report = spark_enumeration(&phi, DEFAULT_EPS_SVD, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(report.n_submatrices, 18_564);
        assert!(report.sigma_omega > 1e-12);
        assert_eq!(report.n_below_threshold, 0);
    }

    #[test]
    fn repeated_code_pair_is_deficient() {
        // Two pulses share a code, so the R part of their rows coincides and
        // some N-subsets have dependent columns.
        let codes = FrequencyCodes::from_indices(vec![0, 1, 2, 0, 1, 2], 3).unwrap();
        let phi = build_phi(&RadarParams::grid(6, 3), &codes).unwrap();
        let report = spark_enumeration(&phi, DEFAULT_EPS_SVD, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!(report.is_deficient());
        assert!(report.fraction_below() > 0.0 && report.fraction_below() < 1.0);
    }

    #[test]
    fn budget_and_sampling() {
        let phi = discrete_phi(8, 4, 1);
        assert!(matches!(spark_enumeration(&phi, 1e-15, 1000), Err(Error::Resource(_))));
        let report = spark_sampling(&phi, 1e-15, 200, 5).unwrap();
        assert!(!report.exhaustive);
        assert_eq!(report.n_submatrices, 200);
        assert_eq!(report, spark_sampling(&phi, 1e-15, 200, 5).unwrap());
    }

    #[test]
    fn chi_examples() {
        let codes = sample_codes(3, CodeDistribution::Discrete { n_codes: 8 }, 64).unwrap();
        let c = chi(&codes, 8, 0.0, 2.0 * PI / 64.0).unwrap();
        assert!(c.norm() < 1e-12);
        assert_eq!(chi(&codes, 8, 0.0, 0.0).unwrap(), C64::new(1.0, 0.0));
        assert!(matches!(chi(&codes, 8, 0.1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn chi_matches_column_inner_product() {
        let phi = discrete_phi(64, 8, 4);
        let c0 = phi.column(0);
        for &(m, l) in &[(1, 0), (3, 17), (7, 63), (0, 5)] {
            let direct = c0.dotc(&phi.column(l + 64 * m)) / 64.0;
            let p = 2.0 * PI * m as f64 / 8.0;
            let q = 2.0 * PI * l as f64 / 64.0;
            assert!((chi(phi.codes(), 8, p, q).unwrap() - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn first_row_matches_all_pairs() {
        for seed in 0..3 {
            let phi = discrete_phi(64, 16, seed);
            let fast = coherence(&phi).mu;
            assert!((fast - coherence_all_pairs(&phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mode_difference_set_matches_all_pairs() {
        for (seed, ratio) in [(0, 0.1), (1, 0.5)] {
            let codes = sample_codes(seed, CodeDistribution::Discrete { n_codes: 4 }, 16).unwrap();
            let params = RadarParams::grid(16, 4).with_relative_bandwidth(ratio);
            let phi = build_phi(&params, &codes).unwrap();
            assert!(coherence(&phi).chi_values.is_none());
            assert!((coherence(&phi).mu - coherence_all_pairs(&phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_edge_cases() {
        let psi = build_iwr_psi(&RadarParams::grid(8, 4)).unwrap();
        assert!(coherence_all_pairs(&psi) < 1e-9);
        assert_eq!(coherence(&discrete_phi(8, 1, 0)).mu, 0.0);
        let mu = coherence(&discrete_phi(16, 4, 2)).mu;
        assert!((0.0..=1.0).contains(&mu));
    }

    #[test]
    fn gram_rows_are_permutations_of_first() {
        let phi = discrete_phi(16, 4, 6);
        let g = gram_modulus(&phi);
        let sorted = |r: usize| {
            let mut v: Vec<f64> = g.row(r).iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let first = sorted(0);
        for r in 1..g.nrows() {
            for (a, b) in sorted(r).iter().zip(&first) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bound_examples() {
        let t = rayleigh_tail_bound(0.25, 64).unwrap();
        assert!((t.value - (-2f64).exp()).abs() < 1e-15 && t.condition_met);
        let weak = rayleigh_tail_bound(0.05, 64).unwrap();
        assert!(!weak.condition_met && weak.value > 0.0);
        assert!(rayleigh_tail_bound(1e3, 64).unwrap().value == 0.0);
        let u = union_bound(0.5, 64, 16).unwrap();
        assert!((u.raw - 960.0 * (-8f64).exp()).abs() < 1e-12);
        assert!((u.raw - 0.3221).abs() < 1e-4);
        assert_eq!(union_bound(0.3, 64, 1).unwrap().raw, 0.0);
        assert_eq!(union_bound(0.01, 64, 16).unwrap().clamped, 1.0);
    }

    #[test]
    fn union_bound_decreases_past_stationary_point() {
        let (eps, m) = (0.3f64, 16usize);
        // d/dN [N(M−1) e^{−Nε²/2}] = 0 at N = 2/ε².
        let start = (2.0 / (eps * eps)).ceil() as usize;
        let values: Vec<f64> = (start..start + 200).map(|n| union_bound(eps, n, m).unwrap().raw).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn recoverable_k_examples() {
        let k = max_recoverable_k(64, 8, 0.1).unwrap();
        assert!((k - 1.4755).abs() < 1e-3);
        assert_eq!((k * 10.0).round() / 10.0, 1.5);
        assert!(max_recoverable_k(64, 8, 0.5).unwrap() > k);
        let big = max_recoverable_k(512, 32, 0.1).unwrap();
        let want = 0.5 + (512.0f64 / ((512.0f64 * 31.0).ln() + 10f64.ln())).sqrt() / 8f64.sqrt();
        assert!((big - want).abs() < 1e-12);
        assert!(matches!(max_recoverable_k(64, 1, 0.1), Err(Error::Domain(_))));
        assert!(max_recoverable_k(64, 8, 1.0).is_err());
        assert_eq!(l0_limit(6), 3.0);
        assert_eq!(l0_limit(64), 32.0);
        assert_eq!(l0_limit(512), 256.0);
    }

    #[test]
    fn chi_moments() {
        let n = 64;
        let trials = 20_000;
        let s = chi_statistics(n, 8, trials, 17, 2.0 * PI * 3.0 / 8.0, 2.0 * PI * 5.0 / 64.0).unwrap();
        let half = 1.0 / (2.0 * n as f64);
        assert!(!s.special_case);
        assert!(s.mean.norm() <= 3.0 * (half / trials as f64).sqrt() * 2f64.sqrt());
        assert!((s.var_re / half - 1.0).abs() < 0.05);
        assert!((s.var_im / half - 1.0).abs() < 0.05);
        assert!((s.mean_abs_sq * n as f64 - 1.0).abs() < 0.05);

        let pi = chi_statistics(n, 8, trials, 18, PI, PI).unwrap();
        assert!(pi.special_case);
        assert!((pi.var_re * n as f64 - 1.0).abs() < 0.05);
        assert!(pi.var_im < 1e-20);
        assert!(chi_statistics(n, 3, 100, 0, PI, PI).is_err());
    }

    #[test]
    fn coherence_samples_are_consistent_with_matched_filter() {
        let phi = discrete_phi(32, 4, 8);
        let sample = coherence(&phi);
        let chis = sample.chi_values.unwrap();
        let mf: CVector = phi.apply_adjoint(&phi.column(0));
        for (i, c) in chis.iter().enumerate() {
            assert!((mf[32 + i].norm() / 32.0 - c).abs() < 1e-12);
        }
    }
}
