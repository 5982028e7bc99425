//! Small dense complex kernels: one-sided Jacobi singular values and an
//! incrementally grown QR factorization for least squares.

use crate::{CMatrix, CVector, C64};

const JACOBI_MAX_SWEEPS: usize = 60;

/// Singular values of a column-major `rows × cols` buffer by one-sided
/// (Hestenes) Jacobi rotations, sorted in descending order. The buffer is
/// overwritten with `U Σ`.
pub fn jacobi_singular_values_in_place(buf: &mut [C64], rows: usize, cols: usize) -> Vec<f64> {
    jacobi_orthogonalize(buf, rows, cols);
    let mut s: Vec<f64> = (0..cols).map(|c| col_norm_sq(buf, rows, c).sqrt()).collect();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value of a column-major buffer; see
/// [`jacobi_singular_values_in_place`].
pub fn jacobi_min_singular_value_in_place(buf: &mut [C64], rows: usize, cols: usize) -> f64 {
    jacobi_orthogonalize(buf, rows, cols);
    (0..cols)
        .map(|c| col_norm_sq(buf, rows, c))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Singular values of a dense matrix, descending. Wide matrices are
/// handled through their adjoint.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let a = if a.nrows() < a.ncols() {
        a.adjoint()
    } else {
        a.clone()
    };
    let (rows, cols) = a.shape();
    let mut buf: Vec<C64> = a.as_slice().to_vec();
    jacobi_singular_values_in_place(&mut buf, rows, cols)
}

#[inline]
fn col_norm_sq(buf: &[C64], rows: usize, c: usize) -> f64 {
    buf[c * rows..(c + 1) * rows].iter().map(|v| v.norm_sqr()).sum()
}

fn jacobi_orthogonalize(buf: &mut [C64], rows: usize, cols: usize) {
    debug_assert_eq!(buf.len(), rows * cols);
    let tol = f64::EPSILON;
    let mut norms = vec![0.0; cols];
    for _ in 0..JACOBI_MAX_SWEEPS {
        // Norms are refreshed exactly once per sweep and updated in closed
        // form after each rotation in between.
        for (c, n) in norms.iter_mut().enumerate() {
            *n = col_norm_sq(buf, rows, c);
        }
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let (head, tail) = buf.split_at_mut(j * rows);
                let ci = &mut head[i * rows..(i + 1) * rows];
                let cj = &mut tail[..rows];
                let gamma: C64 = ci.iter().zip(cj.iter()).map(|(a, b)| a.conj() * b).sum();
                let (alpha, beta) = (norms[i], norms[j]);
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
                    let bt = *b * phase.conj();
                    let ai = *a;
                    *a = ai * c - bt * s;
                    *b = ai * s + bt * c;
                }
                norms[i] = (alpha - t * g).max(0.0);
                norms[j] = beta + t * g;
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Thin QR factorization grown one column at a time by modified
/// Gram-Schmidt with one full reorthogonalization pass.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    rows: usize,
    q: Vec<CVector>,
    /// Column `k` of the upper-triangular factor, `k + 1` entries.
    r: Vec<Vec<C64>>,
    rank_tol: f64,
}

impl IncrementalQr {
    pub fn new(rows: usize, rank_tol: f64) -> Self {
        Self {
            rows,
            q: Vec::new(),
            r: Vec::new(),
            rank_tol,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Append a column. Returns `false` (leaving the factorization
    /// unchanged) if it is numerically dependent on the current ones.
    pub fn push(&mut self, v: &CVector) -> bool {
        assert_eq!(v.len(), self.rows);
        let vnorm = v.norm();
        if vnorm == 0.0 || self.q.len() >= self.rows {
            return false;
        }
        let mut w = v.clone();
        let mut coeffs = vec![C64::new(0.0, 0.0); self.q.len()];
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let h = qk.dotc(&w);
                w.axpy(-h, qk, C64::new(1.0, 0.0));
                coeffs[k] += h;
            }
        }
        let wnorm = w.norm();
        if wnorm <= self.rank_tol * vnorm {
            return false;
        }
        w.unscale_mut(wnorm);
        coeffs.push(C64::new(wnorm, 0.0));
        self.q.push(w);
        self.r.push(coeffs);
        true
    }

    /// Least-squares coefficients `argmin ‖y − A c‖` for the columns pushed so far.
    pub fn solve(&self, y: &CVector) -> CVector {
        let k = self.q.len();
        let z: Vec<C64> = self.q.iter().map(|qk| qk.dotc(y)).collect();
        let mut x = CVector::zeros(k);
        for i in (0..k).rev() {
            let mut acc = z[i];
            for j in i + 1..k {
                acc -= self.r[j][i] * x[j];
            }
            x[i] = acc / self.r[i][i];
        }
        x
    }

    /// `y` minus its projection onto the span of the pushed columns.
    pub fn residual(&self, y: &CVector) -> CVector {
        let mut r = y.clone();
        for _ in 0..2 {
            for qk in &self.q {
                let h = qk.dotc(&r);
                r.axpy(-h, qk, C64::new(1.0, 0.0));
            }
        }
        r
    }
}

/// Least squares on the columns of `a`. `None` if `a` is numerically rank
/// deficient at relative tolerance `rank_tol`.
pub fn least_squares(a: &CMatrix, y: &CVector, rank_tol: f64) -> Option<(CVector, CVector)> {
    let mut qr = IncrementalQr::new(a.nrows(), rank_tol);
    for c in a.column_iter() {
        if !qr.push(&c.into_owned()) {
            return None;
        }
    }
    Some((qr.solve(y), qr.residual(y)))
}

/// Iterator over `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }

    /// Visit each subset without allocating.
    pub fn for_each_subset(mut self, mut f: impl FnMut(&[usize])) {
        while !self.done {
            f(&self.current);
            self.advance();
        }
    }

    fn advance(&mut self) {
        let k = self.current.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.advance();
        Some(out)
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn jacobi_matches_nalgebra_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(r, c) in &[(6, 6), (8, 5), (4, 7), (1, 1)] {
            let a = random_matrix(&mut rng, r, c);
            let ours = singular_values(&a);
            let mut theirs: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
            theirs.sort_unstable_by(|x, y| y.total_cmp(x));
            assert_eq!(ours.len(), theirs.len());
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() <= 1e-12 * theirs[0], "{x} vs {y}");
            }
        }
    }

    #[test]
    fn jacobi_detects_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = random_matrix(&mut rng, 6, 6);
        let c0 = a.column(0).into_owned();
        a.set_column(3, &(c0 * C64::new(0.3, -1.1)));
        let s = singular_values(&a);
        assert!(s[5] < 1e-14 * s[0], "{s:?}");
    }

    #[test]
    fn qr_least_squares_is_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 64, 50);
        let x = CVector::from_fn(50, |_, _| C64::new(rng.random(), rng.random()));
        let y = &a * &x;
        let (xh, r) = least_squares(&a, &y, 1e-10).unwrap();
        assert!((&xh - &x).norm() <= 1e-10 * x.norm());
        assert!(r.norm() <= 1e-12 * y.norm());
    }

    #[test]
    fn qr_rejects_dependent_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 5, 2);
        let mut qr = IncrementalQr::new(5, 1e-10);
        assert!(qr.push(&a.column(0).into_owned()));
        assert!(qr.push(&a.column(1).into_owned()));
        let dep = a.column(0) * C64::new(2.0, 0.0) - a.column(1);
        assert!(!qr.push(&dep));
        assert_eq!(qr.len(), 2);
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let all: Vec<_> = Combinations::new(5, 3).collect();
        assert_eq!(all.len() as u128, binomial(5, 3));
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 1, 3]);
        assert_eq!(all.last().unwrap(), &vec![2, 3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(18, 6), 18_564);
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(3, 5), 0);
    }
}
