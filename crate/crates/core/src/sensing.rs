//! The FAR sensing matrix `Φ = (Rᵀ ⊙ Dᵀ)ᵀ` and related matrices.
//!
//! Column `l + mN` of `Φ` is the echo signature of a unit scatterer at HRR
//! bin `m` and Doppler bin `l`:
//!
//! ```text
//! Φ[n, l + mN] = R[n, m] · D[n, l] = exp(j 2π m d_n) · exp(j 2π l n ζ_n / N)
//! ```
//!
//! `Φ` is always held in factored form (`R` is `N × M`, `D` is `N × N`);
//! a dense copy is kept only when it fits the memory budget.

use std::borrow::Cow;
use std::io::Write;

use crate::signal_model::{cis_turns, doppler_turns, zetas, BandwidthMode, CodeDistribution, FrequencyCodes, RadarParams};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default cap on densely materialized entries (2²⁴ complex values, 256 MiB).
pub const DEFAULT_DENSE_BUDGET: usize = 1 << 24;

/// A linear map `C^ncols → C^nrows` with column access. Implemented by
/// dense matrices and by [`SensingMatrix`]; all solvers accept either.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn column(&self, j: usize) -> CVector;
    /// `A x`.
    fn apply(&self, x: &CVector) -> CVector;
    /// `Aᴴ y`.
    fn apply_adjoint(&self, y: &CVector) -> CVector;

    /// Sub-matrix of the selected columns.
    fn columns(&self, idx: &[usize]) -> CMatrix {
        let mut out = CMatrix::zeros(self.nrows(), idx.len());
        for (k, &j) in idx.iter().enumerate() {
            out.set_column(k, &self.column(j));
        }
        out
    }

    fn to_dense(&self) -> CMatrix {
        let all: Vec<usize> = (0..self.ncols()).collect();
        self.columns(&all)
    }
}

impl LinearOperator for CMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn column(&self, j: usize) -> CVector {
        self.column(j).into_owned()
    }

    fn apply(&self, x: &CVector) -> CVector {
        self * x
    }

    fn apply_adjoint(&self, y: &CVector) -> CVector {
        self.ad_mul(y)
    }

    fn to_dense(&self) -> CMatrix {
        self.clone()
    }
}

/// How `Φ` is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    /// Dense when `N·NM` entries fit the budget, factored otherwise.
    Auto { budget: usize },
    /// Always dense; exceeding the budget is an error.
    Dense { budget: usize },
    /// Never dense; columns are generated from the factors on demand.
    Lazy,
}

impl Default for Storage {
    fn default() -> Self {
        Storage::Auto {
            budget: DEFAULT_DENSE_BUDGET,
        }
    }
}

/// The `N × NM` FAR sensing matrix. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    n_pulses: usize,
    n_hrr_bins: usize,
    codes: FrequencyCodes,
    mode: BandwidthMode,
    zetas: Vec<f64>,
    r: CMatrix,
    d: CMatrix,
    dense: Option<CMatrix>,
}

impl SensingMatrix {
    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn n_hrr_bins(&self) -> usize {
        self.n_hrr_bins
    }

    pub fn codes(&self) -> &FrequencyCodes {
        &self.codes
    }

    pub fn mode(&self) -> BandwidthMode {
        self.mode
    }

    /// Per-pulse Doppler scaling `ζ_n`.
    pub fn zetas(&self) -> &[f64] {
        &self.zetas
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn d(&self) -> &CMatrix {
        &self.d
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// `(m, l)` grid indices of column `j`.
    #[inline]
    pub fn grid_of(&self, j: usize) -> (usize, usize) {
        (j / self.n_pulses, j % self.n_pulses)
    }

    #[inline]
    pub fn column_index(&self, m: usize, l: usize) -> usize {
        l + m * self.n_pulses
    }

    #[inline]
    pub fn entry(&self, n: usize, j: usize) -> C64 {
        match &self.dense {
            Some(dense) => dense[(n, j)],
            None => {
                let (m, l) = self.grid_of(j);
                self.r[(n, m)] * self.d[(n, l)]
            }
        }
    }

    /// Dense view, borrowed when cached.
    pub fn dense(&self) -> Cow<'_, CMatrix> {
        match &self.dense {
            Some(d) => Cow::Borrowed(d),
            None => Cow::Owned(khatri_rao_rows(&self.r, &self.d)),
        }
    }
}

impl LinearOperator for SensingMatrix {
    fn nrows(&self) -> usize {
        self.n_pulses
    }

    fn ncols(&self) -> usize {
        self.n_pulses * self.n_hrr_bins
    }

    fn column(&self, j: usize) -> CVector {
        match &self.dense {
            Some(d) => d.column(j).into_owned(),
            None => {
                let (m, l) = self.grid_of(j);
                self.r.column(m).component_mul(&self.d.column(l))
            }
        }
    }

    fn apply(&self, x: &CVector) -> CVector {
        if let Some(d) = &self.dense {
            return d * x;
        }
        let n = self.n_pulses;
        let mut y = CVector::zeros(n);
        for m in 0..self.n_hrr_bins {
            let t = &self.d * x.rows(m * n, n);
            y += self.r.column(m).component_mul(&t);
        }
        y
    }

    fn apply_adjoint(&self, y: &CVector) -> CVector {
        if let Some(d) = &self.dense {
            return d.ad_mul(y);
        }
        let n = self.n_pulses;
        let mut out = CVector::zeros(self.ncols());
        for m in 0..self.n_hrr_bins {
            let v = self.r.column(m).map(|c| c.conj()).component_mul(y);
            out.rows_mut(m * n, n).copy_from(&self.d.ad_mul(&v));
        }
        out
    }

    fn columns(&self, idx: &[usize]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_pulses, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            out.set_column(k, &LinearOperator::column(self, j));
        }
        out
    }

    fn to_dense(&self) -> CMatrix {
        self.dense().into_owned()
    }
}

/// Row-wise Khatri-Rao product: `out[n, l + mN] = r[n, m] · d[n, l]`.
fn khatri_rao_rows(r: &CMatrix, d: &CMatrix) -> CMatrix {
    let n = d.ncols();
    CMatrix::from_fn(r.nrows(), r.ncols() * n, |row, j| r[(row, j / n)] * d[(row, j % n)])
}

fn check_codes(params: &RadarParams, codes: &FrequencyCodes) -> Result<()> {
    if codes.len() != params.n_pulses {
        return Err(Error::shape(
            format!("{} codes", params.n_pulses),
            format!("{} codes", codes.len()),
        ));
    }
    Ok(())
}

/// `R[n, m] = exp(j 2π m d_n)`, size `N × M`.
pub fn build_r(codes: &FrequencyCodes, n_hrr_bins: usize) -> CMatrix {
    CMatrix::from_fn(codes.len(), n_hrr_bins, |n, m| cis_turns(codes.hrr_turns(n, m)))
}

/// `D[n, l] = exp(j 2π l n ζ_n / N)`, size `N × N`.
pub fn build_d(params: &RadarParams, codes: &FrequencyCodes) -> Result<CMatrix> {
    check_codes(params, codes)?;
    let n_pulses = params.n_pulses;
    let z = zetas(params, codes);
    Ok(CMatrix::from_fn(n_pulses, n_pulses, |n, l| {
        cis_turns(doppler_turns(l, n, n_pulses, z[n]))
    }))
}

/// `Φ` with default storage.
pub fn build_phi(params: &RadarParams, codes: &FrequencyCodes) -> Result<SensingMatrix> {
    build_phi_with(params, codes, Storage::default())
}

pub fn build_phi_with(
    params: &RadarParams,
    codes: &FrequencyCodes,
    storage: Storage,
) -> Result<SensingMatrix> {
    params.validate()?;
    check_codes(params, codes)?;
    let r = build_r(codes, params.n_hrr_bins);
    let d = build_d(params, codes)?;
    let entries = params.n_pulses * params.n_columns();
    let dense = match storage {
        Storage::Auto { budget } => (entries <= budget).then(|| khatri_rao_rows(&r, &d)),
        Storage::Dense { budget } => {
            if entries > budget {
                return Err(Error::Resource(format!(
                    "dense sensing matrix needs {entries} entries, budget is {budget}"
                )));
            }
            Some(khatri_rao_rows(&r, &d))
        }
        Storage::Lazy => None,
    };
    Ok(SensingMatrix {
        n_pulses: params.n_pulses,
        n_hrr_bins: params.n_hrr_bins,
        codes: codes.clone(),
        mode: params.mode,
        zetas: zetas(params, codes),
        r,
        d,
        dense,
    })
}

/// `M × M` Fourier matrix `F[l, m] = exp(j 2π m l / M)`.
pub fn fourier_matrix(size: usize) -> CMatrix {
    CMatrix::from_fn(size, size, |l, m| {
        cis_turns(((m * l) % size) as f64 / size as f64)
    })
}

/// Sensing matrix `Ψ = F ⊗ D` of the instantaneous-wideband radar that
/// receives all `M` sub-bands every pulse. Only defined with `ζ ≡ 1`.
pub fn build_iwr_psi(params: &RadarParams) -> Result<CMatrix> {
    if params.mode != BandwidthMode::Approximate {
        return Err(Error::UnsupportedMode(
            "wideband reference matrix is only defined in approximate mode".into(),
        ));
    }
    params.validate()?;
    let n = params.n_pulses;
    let d = fourier_matrix(n);
    Ok(fourier_matrix(params.n_hrr_bins).kronecker(&d))
}

/// Check that row `n` of `Φ` equals row `n + M d_n N` of `Ψ` for every `n`
/// (to 1e-12), i.e. that each pulse samples one sub-band of the wideband
/// radar.
pub fn phi_row_sampling_check(
    phi: &SensingMatrix,
    psi: &CMatrix,
    codes: &FrequencyCodes,
) -> Result<bool> {
    if phi.mode() != BandwidthMode::Approximate {
        return Err(Error::Precondition(
            "row sampling identity assumes approximate mode".into(),
        ));
    }
    let n_pulses = phi.n_pulses();
    let m_bins = phi.n_hrr_bins();
    let offsets = sub_band_offsets(codes, m_bins)?;
    if offsets.len() != n_pulses {
        return Err(Error::shape(
            format!("{n_pulses} codes"),
            format!("{} codes", offsets.len()),
        ));
    }
    let cols = phi.ncols();
    if psi.shape() != (cols, cols) {
        return Err(Error::shape(format!("{cols}x{cols}"), format!("{:?}", psi.shape())));
    }
    for (n, &band) in offsets.iter().enumerate() {
        let row = n + band * n_pulses;
        for j in 0..cols {
            if (phi.entry(n, j) - psi[(row, j)]).norm() > 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Integer sub-band index `M d_n` of every pulse.
fn sub_band_offsets(codes: &FrequencyCodes, m_bins: usize) -> Result<Vec<usize>> {
    match (codes.distribution(), codes.indices()) {
        (CodeDistribution::Discrete { n_codes }, Some(idx)) => idx
            .iter()
            .map(|&k| {
                if (m_bins * k).is_multiple_of(n_codes) {
                    Ok(m_bins * k / n_codes)
                } else {
                    Err(Error::Precondition(format!(
                        "M d_n = {m_bins}*{k}/{n_codes} is not an integer"
                    )))
                }
            })
            .collect(),
        _ => Err(Error::Precondition(
            "row sampling needs discrete codes with integer M d_n".into(),
        )),
    }
}

/// Write `Φ` as text: two `#` header lines (dimensions, mode and codes)
/// followed by one line per row with interleaved real and imaginary parts.
pub fn write_phi_csv<W: Write>(phi: &SensingMatrix, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# N={} M={} mode={}",
        phi.n_pulses(),
        phi.n_hrr_bins(),
        match phi.mode() {
            BandwidthMode::Exact => "exact",
            BandwidthMode::Approximate => "approximate",
        }
    )?;
    let codes: Vec<String> = phi.codes().codes().iter().map(|c| c.to_string()).collect();
    writeln!(out, "# codes={}", codes.join(","))?;
    let dense = phi.dense();
    for row in dense.row_iter() {
        let fields: Vec<String> = row
            .iter()
            .flat_map(|v| [v.re.to_string(), v.im.to_string()])
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
