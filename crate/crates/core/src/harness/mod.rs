//! Monte-Carlo experiments: configuration, trial orchestration and
//! CSV/JSON output.
//!
//! Trial `t` of sweep point `s` draws all of its randomness from a ChaCha8
//! generator seeded with `master_seed + t` on stream `s`, so every trial is
//! a pure function of the configuration and can run on any worker thread.
//! Results are collected in trial order, which makes the output independent
//! of the thread count.

mod config;
mod output;

pub use config::{
    linspace, BoundsPoint, CodeKind, ExperimentConfig, ExperimentKind, Overrides, SolverSettings, SparkSettings,
    Sweep, DEFAULT_MASTER_SEED,
};
pub use output::{sidecar_path, write_outputs};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{coherence, l0_limit, max_recoverable_k, spark_enumeration, union_bound};
use crate::sensing::{build_phi, LinearOperator};
use crate::signal_model::{add_noise_with, sample_codes_with, BandwidthMode, CodeDistribution, RadarParams, Scene};
use crate::solvers::{basis_pursuit, extract_support, lasso, matched_filter, subspace_pursuit, SolverConfig};
use crate::{Error, Result};

/// Generator for trial `trial` of sweep point `stream`.
pub fn trial_rng(master_seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(trial as u64));
    rng.set_stream(stream);
    rng
}

/// Log-spaced histogram of non-negative values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges in `log10` units; bin `i` is `[edges[i], edges[i+1])`.
    pub log10_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values below the first edge, including exact zeros.
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn log10(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            log10_edges: linspace(lo, hi, bins + 1),
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let bins = self.counts.len();
        let lo = self.log10_edges[0];
        let hi = self.log10_edges[bins];
        let v = if value > 0.0 { value.log10() } else { f64::NEG_INFINITY };
        if v < lo {
            self.underflow += 1;
        } else if v >= hi {
            self.overflow += 1;
        } else {
            let i = ((v - lo) / (hi - lo) * bins as f64) as usize;
            self.counts[i.min(bins - 1)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparkRecord {
    pub trial: usize,
    pub sigma_omega: f64,
    pub n_below_eps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparkSummary {
    pub n_trials: usize,
    pub n_submatrices_per_trial: u64,
    /// Fraction of trials with `σ_Ω < ε_SVD`.
    pub fraction_trials_below: f64,
    /// Fraction of all enumerated submatrices with `σ_N < ε_SVD`.
    pub fraction_submatrices_below: f64,
    pub min_sigma_omega: f64,
    pub sigma_n_histogram: Histogram,
    pub sigma_omega_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipRecord {
    pub arm: String,
    pub trial: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipArm {
    pub name: String,
    pub codes: CodeKind,
    pub relative_bandwidth: f64,
    pub mean_mu: f64,
    pub max_mu: f64,
    /// Empirical `P(μ ≤ ε)` on the grid.
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipSummary {
    pub eps_grid: Vec<f64>,
    pub arms: Vec<MipArm>,
    /// Unclamped `(MN − N) exp(−Nε²/2)` on the grid.
    pub union_bound_raw: Vec<f64>,
    /// `1 − min(1, union bound)`.
    pub theoretical_cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub solver: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub trial: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyRecord {
    pub solver: String,
    pub sigma2_db: f64,
    pub trial: usize,
    pub success: bool,
}

/// Success probability per solver along a sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub solver: String,
    pub probability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Sweep values (`K` or `σ²` in dB).
    pub axis: Vec<f64>,
    pub curves: Vec<SuccessCurve>,
}

impl SweepSummary {
    pub fn curve(&self, solver: &str) -> Option<&[f64]> {
        self.curves
            .iter()
            .find(|c| c.solver == solver)
            .map(|c| c.probability.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    #[serde(rename = "N")]
    pub n_pulses: usize,
    #[serde(rename = "M")]
    pub n_hrr_bins: usize,
    pub delta: f64,
    pub k_mip: f64,
    pub k_l0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionCurvePoint {
    #[serde(rename = "N")]
    pub n_pulses: usize,
    #[serde(rename = "M")]
    pub n_hrr_bins: usize,
    pub eps: f64,
    pub raw: f64,
    pub clamped: f64,
}

/// Records and aggregates of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentResult {
    Spark {
        records: Vec<SparkRecord>,
        summary: SparkSummary,
    },
    Mip {
        records: Vec<MipRecord>,
        summary: MipSummary,
    },
    PhaseTransition {
        records: Vec<PhaseRecord>,
        summary: SweepSummary,
    },
    NoisyRecovery {
        records: Vec<NoisyRecord>,
        summary: SweepSummary,
    },
    Bounds {
        records: Vec<BoundsRecord>,
        union_curves: Vec<UnionCurvePoint>,
    },
}

/// Run the experiment named by `config.experiment`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Spark => run_spark_experiment(config),
        ExperimentKind::Mip => run_mip_experiment(config),
        ExperimentKind::PhaseTransition => run_phase_transition(config),
        ExperimentKind::NoisyRecovery => run_noisy_recovery(config),
        ExperimentKind::Bounds => run_bounds_report(config),
    }
}

/// Run on a dedicated pool of `threads` workers (all cores if `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(config))
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "expected a `{}` configuration, got `{}`",
            kind.name(),
            config.experiment.name()
        )));
    }
    config.validate()
}

/// Exhaustive spark check per trial.
pub fn run_spark_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Spark)?;
    let params = &config.params;
    let dist = config.spark.codes.distribution(params);
    let eps = config.spark.eps_svd;
    let budget = config.spark.enumeration_budget;

    struct Trial {
        record: SparkRecord,
        n_submatrices: u64,
        hist: Histogram,
    }
    let trials: Vec<Trial> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.master_seed, t, 0);
            let codes = sample_codes_with(&mut rng, dist, params.n_pulses)?;
            let phi = build_phi(params, &codes)?;
            let report = spark_enumeration(&phi, eps, budget)?;
            let mut hist = sigma_histogram();
            for &v in &report.sigma_n_values {
                hist.add(v);
            }
            Ok(Trial {
                record: SparkRecord {
                    trial: t,
                    sigma_omega: report.sigma_omega,
                    n_below_eps: report.n_below_threshold,
                },
                n_submatrices: report.n_submatrices,
                hist,
            })
        })
        .collect::<Result<_>>()?;

    let mut sigma_n_histogram = sigma_histogram();
    let mut sigma_omega_histogram = sigma_histogram();
    let mut below_trials = 0usize;
    let (mut below, mut total) = (0u64, 0u64);
    let mut min_sigma_omega = f64::INFINITY;
    for trial in &trials {
        sigma_n_histogram.merge(&trial.hist);
        sigma_omega_histogram.add(trial.record.sigma_omega);
        if trial.record.sigma_omega < eps {
            below_trials += 1;
        }
        below += trial.record.n_below_eps;
        total += trial.n_submatrices;
        min_sigma_omega = min_sigma_omega.min(trial.record.sigma_omega);
    }
    let summary = SparkSummary {
        n_trials: trials.len(),
        n_submatrices_per_trial: trials.first().map_or(0, |t| t.n_submatrices),
        fraction_trials_below: below_trials as f64 / trials.len() as f64,
        fraction_submatrices_below: if total == 0 { 0.0 } else { below as f64 / total as f64 },
        min_sigma_omega,
        sigma_n_histogram,
        sigma_omega_histogram,
    };
    Ok(ExperimentResult::Spark {
        records: trials.into_iter().map(|t| t.record).collect(),
        summary,
    })
}

fn sigma_histogram() -> Histogram {
    Histogram::log10(-18.0, 1.0, 38)
}

struct ArmSpec {
    name: String,
    codes: CodeKind,
    relative_bandwidth: f64,
    params: RadarParams,
}

fn mip_arms(config: &ExperimentConfig) -> Vec<ArmSpec> {
    let base = RadarParams {
        mode: BandwidthMode::Approximate,
        ..config.params.clone()
    };
    let mut arms: Vec<ArmSpec> = config
        .sweep
        .relative_bandwidths
        .iter()
        .map(|&r| ArmSpec {
            name: format!("discrete_bfc_{r}"),
            codes: CodeKind::Discrete,
            relative_bandwidth: r,
            params: if r == 0.0 {
                base.clone()
            } else {
                base.clone().with_relative_bandwidth(r)
            },
        })
        .collect();
    if config.sweep.continuous_arm {
        arms.push(ArmSpec {
            name: "continuous".into(),
            codes: CodeKind::Continuous,
            relative_bandwidth: 0.0,
            params: base,
        });
    }
    arms
}

/// Empirical coherence distribution per arm against the union bound.
pub fn run_mip_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Mip)?;
    let grid = &config.sweep.eps_grid;
    let mut records = Vec::new();
    let mut arms = Vec::new();
    for (a, arm) in mip_arms(config).into_iter().enumerate() {
        arm.params.validate()?;
        let dist = arm.codes.distribution(&arm.params);
        let mus: Vec<f64> = (0..config.n_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.master_seed, t, a as u64);
                let codes = sample_codes_with(&mut rng, dist, arm.params.n_pulses)?;
                let phi = build_phi(&arm.params, &codes)?;
                Ok(coherence(&phi).mu)
            })
            .collect::<Result<_>>()?;
        let cdf = empirical_cdf(&mus, grid);
        arms.push(MipArm {
            name: arm.name.clone(),
            codes: arm.codes,
            relative_bandwidth: arm.relative_bandwidth,
            mean_mu: mus.iter().sum::<f64>() / mus.len() as f64,
            max_mu: mus.iter().copied().fold(0.0, f64::max),
            cdf,
        });
        records.extend(mus.into_iter().enumerate().map(|(trial, mu)| MipRecord {
            arm: arm.name.clone(),
            trial,
            mu,
        }));
    }
    let (n, m) = (config.params.n_pulses, config.params.n_hrr_bins);
    let union_bound_raw: Vec<f64> = grid
        .iter()
        .map(|&e| union_bound(e, n, m).map(|b| b.raw))
        .collect::<Result<_>>()?;
    let theoretical_cdf = union_bound_raw.iter().map(|b| 1.0 - b.min(1.0)).collect();
    Ok(ExperimentResult::Mip {
        records,
        summary: MipSummary {
            eps_grid: grid.clone(),
            arms,
            union_bound_raw,
            theoretical_cdf,
        },
    })
}

/// `P(μ ≤ ε)` for each grid value.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&e| sorted.partition_point(|&v| v <= e) as f64 / sorted.len().max(1) as f64)
        .collect()
}

fn random_trial(
    params: &RadarParams,
    dist: CodeDistribution,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(crate::sensing::SensingMatrix, Scene, crate::CVector)> {
    let codes = sample_codes_with(rng, dist, params.n_pulses)?;
    let phi = build_phi(params, &codes)?;
    let scene = Scene::random_on_grid(rng, params.n_pulses, params.n_hrr_bins, k)?;
    let y = phi.apply(&scene.to_vector(params.n_pulses, params.n_hrr_bins)?);
    Ok((phi, scene, y))
}

/// Noiseless exact-support recovery of basis pursuit and the matched filter
/// versus the number of scatterers.
pub fn run_phase_transition(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::PhaseTransition)?;
    let params = &config.params;
    let dist = CodeKind::Discrete.distribution(params);
    let ks = &config.sweep.k_values;
    let n = params.n_pulses as f64;

    let outcomes: Vec<Vec<(bool, bool)>> = ks
        .iter()
        .enumerate()
        .map(|(s, &k)| {
            (0..config.n_trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(config.master_seed, t, s as u64);
                    let (phi, scene, y) = random_trial(params, dist, k, &mut rng)?;
                    let truth = scene.support(params.n_pulses)?;
                    let bp_config = config.solvers.basis_pursuit.with_k(Some(k));
                    let bp = basis_pursuit(&phi, &y, &bp_config)?;
                    let mf = matched_filter(&phi, &y)?.map(|c| c / n);
                    let mf_support = extract_support(&mf, Some(k), config.solvers.matched_filter_eps);
                    Ok((bp.support == truth, mf_support == truth))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let axis: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let mut records = Vec::new();
    let mut curves = Vec::new();
    for (solver, pick) in [("bp", 0usize), ("mf", 1usize)] {
        let mut probability = Vec::new();
        for (s, &k) in ks.iter().enumerate() {
            let mut hits = 0;
            for (t, o) in outcomes[s].iter().enumerate() {
                let success = if pick == 0 { o.0 } else { o.1 };
                hits += success as usize;
                records.push(PhaseRecord {
                    solver: solver.into(),
                    k,
                    trial: t,
                    success,
                });
            }
            probability.push(hits as f64 / config.n_trials as f64);
        }
        curves.push(SuccessCurve {
            solver: solver.into(),
            probability,
        });
    }
    Ok(ExperimentResult::PhaseTransition {
        records,
        summary: SweepSummary { axis, curves },
    })
}

/// `σ² = 10^(dB/10)`.
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noisy exact-support recovery of subspace pursuit (known `K`) and Lasso
/// (`λ = lambda_factor · σ²`) versus noise power.
pub fn run_noisy_recovery(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::NoisyRecovery)?;
    let params = &config.params;
    let dist = CodeKind::Discrete.distribution(params);
    let k = config.sweep.n_targets;
    let levels = &config.sweep.sigma2_db;

    let outcomes: Vec<Vec<(bool, bool)>> = levels
        .iter()
        .enumerate()
        .map(|(s, &db)| {
            let sigma2 = db_to_power(db);
            let lambda = config.solvers.lambda_factor * sigma2;
            let lasso_config = SolverConfig {
                lambda,
                ..config.solvers.lasso
            };
            (0..config.n_trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(config.master_seed, t, s as u64);
                    let (phi, scene, clean) = random_trial(params, dist, k, &mut rng)?;
                    let y = add_noise_with(&clean, sigma2, &mut rng)?;
                    let truth = scene.support(params.n_pulses)?;
                    let sp = match subspace_pursuit(&phi, &y, k, &config.solvers.subspace_pursuit) {
                        Ok(r) => r.support == truth,
                        Err(Error::RankDeficient { .. }) => false,
                        Err(e) => return Err(e),
                    };
                    let la = lasso(&phi, &y, lambda, &lasso_config)?;
                    Ok((sp, la.support == truth))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut curves = Vec::new();
    for (solver, pick) in [("sp", 0usize), ("lasso", 1usize)] {
        let mut probability = Vec::new();
        for (s, &db) in levels.iter().enumerate() {
            let mut hits = 0;
            for (t, o) in outcomes[s].iter().enumerate() {
                let success = if pick == 0 { o.0 } else { o.1 };
                hits += success as usize;
                records.push(NoisyRecord {
                    solver: solver.into(),
                    sigma2_db: db,
                    trial: t,
                    success,
                });
            }
            probability.push(hits as f64 / config.n_trials as f64);
        }
        curves.push(SuccessCurve {
            solver: solver.into(),
            probability,
        });
    }
    Ok(ExperimentResult::NoisyRecovery {
        records,
        summary: SweepSummary {
            axis: levels.clone(),
            curves,
        },
    })
}

/// Closed-form recoverable-sparsity table and union-bound curves.
pub fn run_bounds_report(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Bounds)?;
    let mut records = Vec::new();
    let mut union_curves = Vec::new();
    for point in &config.sweep.bounds {
        records.push(BoundsRecord {
            n_pulses: point.n_pulses,
            n_hrr_bins: point.n_hrr_bins,
            delta: point.delta,
            k_mip: max_recoverable_k(point.n_pulses, point.n_hrr_bins, point.delta)?,
            k_l0: l0_limit(point.n_pulses),
        });
        for &eps in &config.sweep.eps_grid {
            let b = union_bound(eps, point.n_pulses, point.n_hrr_bins)?;
            union_curves.push(UnionCurvePoint {
                n_pulses: point.n_pulses,
                n_hrr_bins: point.n_hrr_bins,
                eps,
                raw: b.raw,
                clamped: b.clamped,
            });
        }
    }
    Ok(ExperimentResult::Bounds { records, union_curves })
}
