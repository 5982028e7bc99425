//! Slow-time signal model of a frequency agile radar.
//!
//! Pulse `n` is transmitted at carrier `f_c + d_n B` where `d_n ∈ [0, 1)` is
//! the frequency code. After down-conversion, the sample of pulse `n` from
//! one coarse range cell is
//!
//! ```text
//! y[n] = Σ_k γ_k · exp(j p_k M d_n + j q_k n ζ_n),   ζ_n = 1 + d_n B / f_c
//! ```
//!
//! with `p` the normalized high-resolution range and `q` the normalized
//! Doppler. On the grid, `p = 2πm/M` and `q = 2πl/N`.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{CVector, Error, Result, C64};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TAU: f64 = 2.0 * PI;

/// How the carrier-dependent Doppler scaling `ζ_n` is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMode {
    /// `ζ_n = 1 + d_n B / f_c`.
    Exact,
    /// `ζ_n ≡ 1` (negligible relative bandwidth).
    Approximate,
}

/// Static radar configuration.
///
/// Purely abstract experiments only need `n_pulses` and `n_hrr_bins`; the
/// physical fields are optional and only required by the operations that
/// use them (exact-mode Doppler scaling, unit conversion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarParams {
    /// Number of pulses `N`.
    pub n_pulses: usize,
    /// HRR bins per coarse range bin, `M`.
    pub n_hrr_bins: usize,
    /// Size of the discrete code set, `M*`.
    pub n_codes: usize,
    pub carrier_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub pri_s: Option<f64>,
    pub pulse_width_s: Option<f64>,
    pub mode: BandwidthMode,
}

impl RadarParams {
    /// Abstract grid of `n_pulses × n_hrr_bins` with `M* = M` and `ζ ≡ 1`.
    pub fn grid(n_pulses: usize, n_hrr_bins: usize) -> Self {
        Self {
            n_pulses,
            n_hrr_bins,
            n_codes: n_hrr_bins,
            carrier_hz: None,
            bandwidth_hz: None,
            pri_s: None,
            pulse_width_s: None,
            mode: BandwidthMode::Approximate,
        }
    }

    /// Physical configuration. `M` is derived as `⌈T_p B⌉`.
    pub fn physical(
        n_pulses: usize,
        n_codes: usize,
        carrier_hz: f64,
        bandwidth_hz: f64,
        pri_s: f64,
        pulse_width_s: f64,
    ) -> Result<Self> {
        if !(pulse_width_s > 0.0 && bandwidth_hz > 0.0) {
            return Err(Error::Config(
                "pulse width and bandwidth must be positive".into(),
            ));
        }
        let params = Self {
            n_pulses,
            n_hrr_bins: hrr_bins_per_cell(pulse_width_s, bandwidth_hz),
            n_codes,
            carrier_hz: Some(carrier_hz),
            bandwidth_hz: Some(bandwidth_hz),
            pri_s: Some(pri_s),
            pulse_width_s: Some(pulse_width_s),
            mode: BandwidthMode::Exact,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_n_codes(mut self, n_codes: usize) -> Self {
        self.n_codes = n_codes;
        self
    }

    pub fn with_mode(mut self, mode: BandwidthMode) -> Self {
        self.mode = mode;
        self
    }

    /// Switch to exact mode with the given `B / f_c`. A nominal 10 GHz
    /// carrier is assumed when none is set.
    pub fn with_relative_bandwidth(mut self, ratio: f64) -> Self {
        let carrier = *self.carrier_hz.get_or_insert(10e9);
        self.bandwidth_hz = Some(ratio * carrier);
        self.mode = BandwidthMode::Exact;
        self
    }

    /// `B / f_c`, or zero when either is unknown.
    pub fn relative_bandwidth(&self) -> f64 {
        match (self.bandwidth_hz, self.carrier_hz) {
            (Some(b), Some(fc)) => b / fc,
            _ => 0.0,
        }
    }

    /// Number of grid columns, `N·M`.
    pub fn n_columns(&self) -> usize {
        self.n_pulses * self.n_hrr_bins
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 || self.n_hrr_bins == 0 {
            return Err(Error::Config("N and M must be at least 1".into()));
        }
        if self.n_codes < self.n_hrr_bins {
            return Err(Error::Config(format!(
                "code set size M* = {} is smaller than M = {} (grating lobes)",
                self.n_codes, self.n_hrr_bins
            )));
        }
        if let Some(fc) = self.carrier_hz {
            if !(fc > 0.0) {
                return Err(Error::Config("carrier frequency must be positive".into()));
            }
        }
        if let Some(b) = self.bandwidth_hz {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::Config("bandwidth must be non-negative".into()));
            }
        }
        if self.mode == BandwidthMode::Exact
            && (self.carrier_hz.is_none() || self.bandwidth_hz.is_none())
        {
            return Err(Error::Config(
                "exact bandwidth mode needs both carrier and bandwidth".into(),
            ));
        }
        if let Some(tp) = self.pulse_width_s {
            if !(tp > 0.0) {
                return Err(Error::Config("pulse width must be positive".into()));
            }
            if let Some(tr) = self.pri_s {
                if !(tr > tp) {
                    return Err(Error::Config("PRI must exceed the pulse width".into()));
                }
            }
            if let Some(b) = self.bandwidth_hz {
                let expected = hrr_bins_per_cell(tp, b);
                if expected != self.n_hrr_bins {
                    return Err(Error::Config(format!(
                        "M = {} does not match ceil(T_p B) = {expected}",
                        self.n_hrr_bins
                    )));
                }
            }
        }
        Ok(())
    }

    /// High range resolution `c / 2B`.
    pub fn hrr_resolution_m(&self) -> Result<f64> {
        let b = self.require(self.bandwidth_hz, "bandwidth")?;
        Ok(SPEED_OF_LIGHT / (2.0 * b))
    }

    /// Coarse range resolution `c T_p / 2`.
    pub fn crr_resolution_m(&self) -> Result<f64> {
        let tp = self.require(self.pulse_width_s, "pulse width")?;
        Ok(SPEED_OF_LIGHT * tp / 2.0)
    }

    /// Largest speed for which a target stays inside one coarse range cell
    /// during the coherent processing interval, `T_p c / (2 N T_r)`.
    pub fn max_in_cell_velocity_mps(&self) -> Result<f64> {
        let tr = self.require(self.pri_s, "PRI")?;
        Ok(self.crr_resolution_m()? / (self.n_pulses as f64 * tr))
    }

    fn require(&self, v: Option<f64>, name: &str) -> Result<f64> {
        match v {
            Some(x) if x > 0.0 => Ok(x),
            _ => Err(Error::Config(format!("{name} is required and must be positive"))),
        }
    }
}

/// `⌈T_p B⌉`, tolerant to representation error in the product.
pub fn hrr_bins_per_cell(pulse_width_s: f64, bandwidth_hz: f64) -> usize {
    let prod = pulse_width_s * bandwidth_hz;
    let rounded = prod.round();
    if (prod - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        prod.ceil() as usize
    }
}

/// Distribution the frequency codes are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodeDistribution {
    /// Uniform over `{0, 1/M*, …, (M*−1)/M*}`.
    Discrete { n_codes: usize },
    /// Uniform over `[0, 1)`.
    Continuous,
}

/// One realization of the codes `d_0 … d_{N−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCodes {
    codes: Vec<f64>,
    /// Integer code indices `k_n = d_n M*` for discrete codes.
    indices: Option<Vec<usize>>,
    distribution: CodeDistribution,
}

impl FrequencyCodes {
    /// Discrete codes given by their indices into `{0, …, n_codes − 1}`.
    pub fn from_indices(indices: Vec<usize>, n_codes: usize) -> Result<Self> {
        if n_codes == 0 {
            return Err(Error::Config("discrete code set must be non-empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= n_codes) {
            return Err(Error::Domain(format!(
                "code index {bad} out of range for M* = {n_codes}"
            )));
        }
        let codes = indices.iter().map(|&k| k as f64 / n_codes as f64).collect();
        Ok(Self {
            codes,
            indices: Some(indices),
            distribution: CodeDistribution::Discrete { n_codes },
        })
    }

    /// Continuous codes; each must lie in `[0, 1)`.
    pub fn from_continuous(codes: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = codes.iter().find(|&&d| !(0.0..1.0).contains(&d)) {
            return Err(Error::Domain(format!("code {bad} outside [0, 1)")));
        }
        Ok(Self {
            codes,
            indices: None,
            distribution: CodeDistribution::Continuous,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[f64] {
        &self.codes
    }

    pub fn indices(&self) -> Option<&[usize]> {
        self.indices.as_deref()
    }

    pub fn distribution(&self) -> CodeDistribution {
        self.distribution
    }

    /// Fractional part of `m · d_n`, in turns. Exact modular arithmetic is
    /// used for discrete codes.
    #[inline]
    pub fn hrr_turns(&self, n: usize, m: usize) -> f64 {
        match (&self.indices, self.distribution) {
            (Some(idx), CodeDistribution::Discrete { n_codes }) => {
                ((m * idx[n]) % n_codes) as f64 / n_codes as f64
            }
            _ => (m as f64 * self.codes[n]).fract(),
        }
    }
}

/// Draw `n` i.i.d. uniform codes from `dist`; deterministic in `seed`.
pub fn sample_codes(seed: u64, dist: CodeDistribution, n: usize) -> Result<FrequencyCodes> {
    sample_codes_with(&mut ChaCha8Rng::seed_from_u64(seed), dist, n)
}

/// Same as [`sample_codes`] but drawing from a caller-owned generator.
pub fn sample_codes_with<R: Rng + ?Sized>(
    rng: &mut R,
    dist: CodeDistribution,
    n: usize,
) -> Result<FrequencyCodes> {
    if n == 0 {
        return Err(Error::Config("number of pulses must be at least 1".into()));
    }
    match dist {
        CodeDistribution::Discrete { n_codes } => {
            if n_codes == 0 {
                return Err(Error::Config("discrete code set must be non-empty".into()));
            }
            let idx = (0..n).map(|_| rng.random_range(0..n_codes)).collect();
            FrequencyCodes::from_indices(idx, n_codes)
        }
        CodeDistribution::Continuous => {
            FrequencyCodes::from_continuous((0..n).map(|_| rng.random::<f64>()).collect())
        }
    }
}

/// Doppler scaling `ζ = 1 + d B / f_c` (exact) or `1` (approximate).
#[inline]
pub fn zeta(code: f64, bandwidth_hz: f64, carrier_hz: f64, mode: BandwidthMode) -> f64 {
    match mode {
        BandwidthMode::Exact => 1.0 + code * bandwidth_hz / carrier_hz,
        BandwidthMode::Approximate => 1.0,
    }
}

/// Per-pulse `ζ_n` for a code realization.
pub fn zetas(params: &RadarParams, codes: &FrequencyCodes) -> Vec<f64> {
    let (b, fc) = match params.mode {
        BandwidthMode::Exact => (
            params.bandwidth_hz.unwrap_or(0.0),
            params.carrier_hz.unwrap_or(1.0),
        ),
        BandwidthMode::Approximate => (0.0, 1.0),
    };
    codes
        .codes()
        .iter()
        .map(|&d| zeta(d, b, fc, params.mode))
        .collect()
}

/// `l · n · ζ / N` in turns, with the integer part `l n mod N` reduced
/// exactly so that `ζ = 1` reproduces the Fourier phase bit for bit.
#[inline]
pub(crate) fn doppler_turns(l: usize, n: usize, n_pulses: usize, zeta: f64) -> f64 {
    let base = ((l * n) % n_pulses) as f64 / n_pulses as f64;
    base + (l * n) as f64 * (zeta - 1.0) / n_pulses as f64
}

#[inline]
pub(crate) fn cis_turns(turns: f64) -> C64 {
    C64::from_polar(1.0, TAU * turns)
}

/// A point scatterer with normalized range `p` and Doppler `q` (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub amplitude: C64,
    pub p: f64,
    pub q: f64,
    /// `(m, l)` grid indices when the scatterer sits on the grid.
    pub grid: Option<(usize, usize)>,
}

impl Scatterer {
    /// On-grid scatterer at HRR bin `m` of `n_hrr_bins` and Doppler bin `l` of `n_pulses`.
    pub fn on_grid(m: usize, l: usize, n_hrr_bins: usize, n_pulses: usize, amplitude: C64) -> Self {
        Self {
            amplitude,
            p: TAU * m as f64 / n_hrr_bins as f64,
            q: TAU * l as f64 / n_pulses as f64,
            grid: Some((m, l)),
        }
    }

    /// Scatterer at arbitrary `(p, q)`, wrapped into `[0, 2π)`.
    pub fn off_grid(p: f64, q: f64, amplitude: C64) -> Self {
        Self {
            amplitude,
            p: p.rem_euclid(TAU),
            q: q.rem_euclid(TAU),
            grid: None,
        }
    }

    /// Column of the sensing matrix this scatterer excites, `l + m N`.
    pub fn column(&self, n_pulses: usize) -> Option<usize> {
        self.grid.map(|(m, l)| l + m * n_pulses)
    }
}

/// A set of scatterers with pairwise distinct `(p, q)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    scatterers: Vec<Scatterer>,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>) -> Result<Self> {
        for (i, a) in scatterers.iter().enumerate() {
            for b in &scatterers[i + 1..] {
                let same = match (a.grid, b.grid) {
                    (Some(ga), Some(gb)) => ga == gb,
                    _ => a.p == b.p && a.q == b.q,
                };
                if same {
                    return Err(Error::Domain(format!(
                        "duplicate scatterer position (p, q) = ({}, {})",
                        a.p, a.q
                    )));
                }
            }
        }
        Ok(Self { scatterers })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `k` unit-amplitude on-grid scatterers with uniform random phases on a
    /// support drawn uniformly without replacement from `0..N·M`.
    pub fn random_on_grid<R: Rng + ?Sized>(
        rng: &mut R,
        n_pulses: usize,
        n_hrr_bins: usize,
        k: usize,
    ) -> Result<Self> {
        let n_cols = n_pulses * n_hrr_bins;
        if k > n_cols {
            return Err(Error::Config(format!(
                "cannot place {k} scatterers on {n_cols} grid points"
            )));
        }
        let support = sample(rng, n_cols, k).into_vec();
        let scatterers = support
            .into_iter()
            .map(|col| {
                let phase = rng.random::<f64>() * TAU;
                Scatterer::on_grid(
                    col / n_pulses,
                    col % n_pulses,
                    n_hrr_bins,
                    n_pulses,
                    C64::from_polar(1.0, phase),
                )
            })
            .collect();
        Ok(Self { scatterers })
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    /// Sparsity `K`.
    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    /// Union of two scenes.
    pub fn union(&self, other: &Scene) -> Result<Scene> {
        let mut all = self.scatterers.clone();
        all.extend(other.scatterers.iter().cloned());
        Scene::new(all)
    }

    /// Sorted grid support (column indices). Errors on off-grid scatterers.
    pub fn support(&self, n_pulses: usize) -> Result<Vec<usize>> {
        let mut s = self
            .scatterers
            .iter()
            .map(|sc| {
                sc.column(n_pulses)
                    .ok_or_else(|| Error::Domain("scene has off-grid scatterers".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        s.sort_unstable();
        Ok(s)
    }

    /// Vectorized scene `x` with `x[l + mN] = X[m, l]`.
    pub fn to_vector(&self, n_pulses: usize, n_hrr_bins: usize) -> Result<CVector> {
        let mut x = CVector::zeros(n_pulses * n_hrr_bins);
        for sc in &self.scatterers {
            let (m, l) = sc
                .grid
                .ok_or_else(|| Error::Domain("scene has off-grid scatterers".into()))?;
            if m >= n_hrr_bins || l >= n_pulses {
                return Err(Error::shape(
                    format!("grid within {n_hrr_bins}x{n_pulses}"),
                    format!("({m}, {l})"),
                ));
            }
            x[l + m * n_pulses] += sc.amplitude;
        }
        Ok(x)
    }
}

/// Noiseless slow-time echoes of `scene`.
pub fn synthesize_echoes(
    params: &RadarParams,
    codes: &FrequencyCodes,
    scene: &Scene,
) -> Result<CVector> {
    let n_pulses = params.n_pulses;
    let n_bins = params.n_hrr_bins;
    if codes.len() != n_pulses {
        return Err(Error::shape(
            format!("{n_pulses} codes"),
            format!("{} codes", codes.len()),
        ));
    }
    for sc in scene.scatterers() {
        if let Some((m, l)) = sc.grid {
            if m >= n_bins || l >= n_pulses {
                return Err(Error::shape(
                    format!("grid within {n_bins}x{n_pulses}"),
                    format!("({m}, {l})"),
                ));
            }
        }
    }
    let zetas = zetas(params, codes);
    let mut y = CVector::zeros(n_pulses);
    for (n, yn) in y.iter_mut().enumerate() {
        for sc in scene.scatterers() {
            let phasor = match sc.grid {
                Some((m, l)) => {
                    cis_turns(codes.hrr_turns(n, m))
                        * cis_turns(doppler_turns(l, n, n_pulses, zetas[n]))
                }
                None => C64::from_polar(
                    1.0,
                    sc.p * n_bins as f64 * codes.codes()[n] + sc.q * n as f64 * zetas[n],
                ),
            };
            *yn += sc.amplitude * phasor;
        }
    }
    Ok(y)
}

/// Add circularly symmetric complex Gaussian noise of total variance
/// `sigma2` per entry; deterministic in `seed`.
pub fn add_noise(y: &CVector, sigma2: f64, seed: u64) -> Result<CVector> {
    add_noise_with(y, sigma2, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn add_noise_with<R: Rng + ?Sized>(y: &CVector, sigma2: f64, rng: &mut R) -> Result<CVector> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::Config(format!("noise variance {sigma2} must be >= 0")));
    }
    if sigma2 == 0.0 {
        return Ok(y.clone());
    }
    let s = (sigma2 / 2.0).sqrt();
    Ok(y.map(|v| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        v + C64::new(s * re, s * im)
    }))
}

/// Range, radial velocity and intensity recovered from `(p, q, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalTarget {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub intensity: f64,
}

pub fn to_physical(p: f64, q: f64, amplitude: C64, params: &RadarParams) -> Result<PhysicalTarget> {
    let (b, fc, tr) = physical_fields(params)?;
    let m = params.n_hrr_bins as f64;
    Ok(PhysicalTarget {
        range_m: -m * SPEED_OF_LIGHT * p / (4.0 * PI * b),
        velocity_mps: -SPEED_OF_LIGHT * q / (4.0 * PI * fc * tr),
        intensity: amplitude.norm(),
    })
}

/// Inverse of [`to_physical`]: `(p, q)` for a range and velocity. The
/// returned phases are not wrapped.
pub fn from_physical(range_m: f64, velocity_mps: f64, params: &RadarParams) -> Result<(f64, f64)> {
    let (b, fc, tr) = physical_fields(params)?;
    let m = params.n_hrr_bins as f64;
    Ok((
        -4.0 * PI * b * range_m / (m * SPEED_OF_LIGHT),
        -4.0 * PI * fc * velocity_mps * tr / SPEED_OF_LIGHT,
    ))
}

fn physical_fields(params: &RadarParams) -> Result<(f64, f64, f64)> {
    match (params.bandwidth_hz, params.carrier_hz, params.pri_s) {
        (Some(b), Some(fc), Some(tr)) if b > 0.0 && fc > 0.0 && tr > 0.0 => Ok((b, fc, tr)),
        _ => Err(Error::Config(
            "unit conversion needs positive carrier, bandwidth and PRI".into(),
        )),
    }
}
