use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{DEFAULT_ENUMERATION_BUDGET, DEFAULT_EPS_SVD};
use crate::signal_model::{CodeDistribution, RadarParams};
use crate::solvers::{SolverConfig, NOISELESS_SUPPORT_EPS, NOISY_SUPPORT_EPS};
use crate::{Error, Result};

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "spark")]
    Spark,
    #[serde(rename = "mip")]
    Mip,
    #[serde(rename = "phase")]
    PhaseTransition,
    #[serde(rename = "noisy")]
    NoisyRecovery,
    #[serde(rename = "bounds")]
    Bounds,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spark => "spark",
            ExperimentKind::Mip => "mip",
            ExperimentKind::PhaseTransition => "phase",
            ExperimentKind::NoisyRecovery => "noisy",
            ExperimentKind::Bounds => "bounds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    /// Uniform over the `M*` discrete codes of the radar parameters.
    Discrete,
    Continuous,
}

impl CodeKind {
    pub fn distribution(self, params: &RadarParams) -> CodeDistribution {
        match self {
            CodeKind::Discrete => CodeDistribution::Discrete {
                n_codes: params.n_codes,
            },
            CodeKind::Continuous => CodeDistribution::Continuous,
        }
    }
}

/// `(N, M, δ)` point for the bounds report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsPoint {
    pub n_pulses: usize,
    pub n_hrr_bins: usize,
    pub delta: f64,
}

/// Sweep axes. Each experiment reads only the axes it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Scatterer counts for the phase transition.
    pub k_values: Vec<usize>,
    /// Noise powers in dB relative to a unit-amplitude scatterer.
    pub sigma2_db: Vec<f64>,
    /// Coherence thresholds for the CDF and union-bound curves.
    pub eps_grid: Vec<f64>,
    /// `B / f_c` of the discrete-code coherence arms.
    pub relative_bandwidths: Vec<f64>,
    /// Add a continuous-code, `ζ ≡ 1` coherence arm.
    pub continuous_arm: bool,
    /// Scatterer count for noisy recovery.
    pub n_targets: usize,
    pub bounds: Vec<BoundsPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparkSettings {
    pub codes: CodeKind,
    pub eps_svd: f64,
    pub enumeration_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub basis_pursuit: SolverConfig,
    /// Support threshold applied to the matched filter output `Φᴴy / N`.
    pub matched_filter_eps: f64,
    pub subspace_pursuit: SolverConfig,
    /// Lasso settings; `lambda` is replaced by `lambda_factor · σ²`.
    pub lasso: SolverConfig,
    pub lambda_factor: f64,
}

/// Fully resolved experiment description. Serialized verbatim into the
/// JSON sidecar next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub params: RadarParams,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Main CSV path; companion files share its stem.
    pub output: PathBuf,
    pub sweep: Sweep,
    pub spark: SparkSettings,
    pub solvers: SolverSettings,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n_trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub const DEFAULT_MASTER_SEED: u64 = 20_160_901;

impl ExperimentConfig {
    /// Built-in defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let recovery_params = RadarParams {
            carrier_hz: Some(10e9),
            bandwidth_hz: Some(64e6),
            mode: crate::signal_model::BandwidthMode::Exact,
            ..RadarParams::grid(64, 8)
        };
        let (params, n_trials) = match kind {
            ExperimentKind::Spark => (RadarParams::grid(6, 3), 2000),
            ExperimentKind::Mip => (RadarParams::grid(64, 16), 10_000),
            ExperimentKind::PhaseTransition | ExperimentKind::NoisyRecovery => (recovery_params, 200),
            ExperimentKind::Bounds => (RadarParams::grid(64, 8), 1),
        };
        Self {
            experiment: kind,
            params,
            n_trials,
            master_seed: DEFAULT_MASTER_SEED,
            output: PathBuf::from(format!("{}.csv", kind.name())),
            sweep: Sweep {
                k_values: (1..=16).collect(),
                sigma2_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
                eps_grid: linspace(0.0, 0.6, 200),
                relative_bandwidths: vec![0.0, 0.1, 0.5],
                continuous_arm: true,
                n_targets: 3,
                bounds: vec![
                    BoundsPoint { n_pulses: 64, n_hrr_bins: 8, delta: 0.1 },
                    BoundsPoint { n_pulses: 64, n_hrr_bins: 16, delta: 0.1 },
                    BoundsPoint { n_pulses: 512, n_hrr_bins: 32, delta: 0.1 },
                ],
            },
            spark: SparkSettings {
                codes: CodeKind::Discrete,
                eps_svd: DEFAULT_EPS_SVD,
                enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
            },
            solvers: SolverSettings {
                basis_pursuit: SolverConfig::basis_pursuit().with_support_eps(NOISELESS_SUPPORT_EPS),
                matched_filter_eps: NOISELESS_SUPPORT_EPS,
                subspace_pursuit: SolverConfig::default(),
                lasso: SolverConfig::lasso(0.0).with_support_eps(NOISY_SUPPORT_EPS),
                lambda_factor: 3.0,
            },
        }
    }

    /// Defaults for `kind`, overlaid with the TOML file at `path` (if any)
    /// and then with `overrides`. Unknown keys in the file are errors.
    pub fn resolve(kind: ExperimentKind, path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p)?),
            None => None,
        };
        Self::resolve_str(kind, text.as_deref(), overrides)
    }

    pub fn resolve_str(kind: ExperimentKind, text: Option<&str>, overrides: &Overrides) -> Result<Self> {
        let mut config = match text {
            Some(text) => {
                let file: toml::Table = toml::from_str(text)?;
                let mut base = toml::Table::try_from(Self::defaults(kind))
                    .map_err(|e| Error::Config(format!("cannot encode defaults: {e}")))?;
                merge(&mut base, file);
                let merged: Self = base.try_into()?;
                merged
            }
            None => Self::defaults(kind),
        };
        if config.experiment != kind {
            return Err(Error::Config(format!(
                "config file describes a `{}` experiment, not `{}`",
                config.experiment.name(),
                kind.name()
            )));
        }
        if let Some(n) = overrides.n_trials {
            config.n_trials = n;
        }
        if let Some(s) = overrides.master_seed {
            config.master_seed = s;
        }
        if let Some(o) = &overrides.output {
            config.output = o.clone();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        let sweep = &self.sweep;
        let ncols = self.params.n_columns();
        match self.experiment {
            ExperimentKind::Spark => {
                if !(self.spark.eps_svd > 0.0) {
                    return Err(Error::Config("eps_svd must be positive".into()));
                }
            }
            ExperimentKind::Mip => {
                if sweep.relative_bandwidths.is_empty() && !sweep.continuous_arm {
                    return Err(Error::Config("mip needs at least one arm".into()));
                }
                if sweep.relative_bandwidths.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                    return Err(Error::Config("relative bandwidths must be finite and non-negative".into()));
                }
                check_eps_grid(&sweep.eps_grid)?;
            }
            ExperimentKind::PhaseTransition => {
                if sweep.k_values.is_empty() {
                    return Err(Error::Config("k_values must not be empty".into()));
                }
                if let Some(k) = sweep.k_values.iter().find(|&&k| k == 0 || k > ncols) {
                    return Err(Error::Config(format!("K = {k} outside 1..={ncols}")));
                }
                self.solvers.basis_pursuit.validate()?;
                if !(self.solvers.matched_filter_eps > 0.0) {
                    return Err(Error::Config("matched_filter_eps must be positive".into()));
                }
            }
            ExperimentKind::NoisyRecovery => {
                if sweep.sigma2_db.is_empty() {
                    return Err(Error::Config("sigma2_db must not be empty".into()));
                }
                if sweep.sigma2_db.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("sigma2_db values must be finite".into()));
                }
                let k = sweep.n_targets;
                if k == 0 || 2 * k > self.params.n_pulses {
                    return Err(Error::Config(format!(
                        "n_targets = {k} must satisfy 1 ≤ K ≤ N/2 for subspace pursuit"
                    )));
                }
                self.solvers.subspace_pursuit.validate()?;
                self.solvers.lasso.validate()?;
                if !(self.solvers.lambda_factor >= 0.0) {
                    return Err(Error::Config("lambda_factor must be non-negative".into()));
                }
            }
            ExperimentKind::Bounds => {
                if sweep.bounds.is_empty() {
                    return Err(Error::Config("bounds list must not be empty".into()));
                }
                check_eps_grid(&sweep.eps_grid)?;
            }
        }
        Ok(())
    }
}

fn check_eps_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("eps_grid must not be empty".into()));
    }
    if grid.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::Config("eps_grid values must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("eps_grid must be non-decreasing".into()));
    }
    Ok(())
}

/// Recursive table overlay; scalars and arrays in `top` replace `base`.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
