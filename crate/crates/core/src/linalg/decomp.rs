use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::tensor::DenseTensor;
use crate::error::{Error, Result};

/// Relative tolerance under which two singular values count as one multiplet.
const DEGENERACY_RTOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub max_rank: usize,
    /// Largest allowed discarded weight, relative to the total weight.
    pub cutoff: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { max_rank: usize::MAX, cutoff: 0.0 }
    }
}

impl Truncation {
    /// Number of leading values (sorted descending) to keep.
    ///
    /// The cutoff is applied first and extended over degenerate multiplets;
    /// the result is then capped by `max_rank`.
    pub fn keep_count(&self, weights: &[f64]) -> usize {
        if weights.is_empty() {
            return 0;
        }
        let total: f64 = weights.iter().sum();
        let mut keep = weights.len();
        if total > 0.0 {
            let mut tail = 0.0;
            while keep > 1 && (tail + weights[keep - 1]) / total <= self.cutoff {
                tail += weights[keep - 1];
                keep -= 1;
            }
            while keep < weights.len()
                && weights[keep - 1] > 0.0
                && (weights[keep - 1] - weights[keep]).abs() <= DEGENERACY_RTOL * weights[keep - 1]
            {
                keep += 1;
            }
        }
        keep.min(self.max_rank.max(1))
    }
}

#[derive(Clone, Debug)]
pub struct Svd {
    /// `m x k` with orthonormal columns.
    pub u: DenseTensor,
    pub s: Vec<f64>,
    /// `k x n` with orthonormal rows.
    pub vt: DenseTensor,
    /// Discarded weight relative to the total weight.
    pub discarded: f64,
}

fn sorted_svd(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    let u = svd.u.ok_or(Error::SvdFailed)?;
    let vt = svd.v_t.ok_or(Error::SvdFailed)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt = DMatrix::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    Ok((u, s, vt))
}

/// Truncated singular value decomposition of a rank-2 tensor.
pub fn svd_truncate(m: &DenseTensor, trunc: Truncation) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let mat = m.to_matrix()?;
    let (u, s, vt) = sorted_svd(&mat)?;
    let weights: Vec<f64> = s.iter().map(|x| x * x).collect();
    let total: f64 = weights.iter().sum();
    let k = trunc.keep_count(&weights);
    let discarded = if total > 0.0 { weights[k..].iter().sum::<f64>() / total } else { 0.0 };
    let u = DenseTensor::from_matrix(&u.columns(0, k).into_owned());
    let vt = DenseTensor::from_matrix(&vt.rows(0, k).into_owned());
    Ok(Svd { u, s: s[..k].to_vec(), vt, discarded })
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("eigen input"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let herm = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let tri = herm.symmetric_tridiagonalize();
    let (mut v, d, off) = tri.unpack();
    let mut d: Vec<f64> = d.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();
    tridiagonal_ql(&mut d, &mut e, &mut v)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((vals, vecs))
}

/// Implicit QL iteration on a real symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e` (`e[n - 1]` unused), rotating the columns of `v`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], v: &mut DMatrix<C64>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let mut iterations = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > 60 * n {
                    return Err(Error::NotConverged { iterations, residual: e[l].abs() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = v[(k, i)] * s + h * c;
                        v[(k, i)] = v[(k, i)] * c - h * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Matrix exponential `exp(-i t H)` of a Hermitian matrix.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = vals.len();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, -t * vals[i])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(&vecs * phases * vecs.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(&[rows, cols], |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn reconstruct(svd: &Svd) -> DMatrix<C64> {
        let u = svd.u.to_matrix().unwrap();
        let vt = svd.vt.to_matrix().unwrap();
        let k = svd.s.len();
        let s = DMatrix::from_fn(k, k, |i, j| if i == j { C64::new(svd.s[i], 0.0) } else { C64::new(0.0, 0.0) });
        u * s * vt
    }

    #[test]
    fn full_svd_reconstructs() {
        for (r, c) in [(5, 3), (3, 7), (6, 6)] {
            let m = random(r, c, 7);
            let svd = svd_truncate(&m, Truncation::default()).unwrap();
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            let err = (reconstruct(&svd) - m.to_matrix().unwrap()).norm();
            assert!(err < 1e-12, "{err}");
            assert!(svd.discarded < 1e-15);
        }
    }

    #[test]
    fn truncation_error_equals_discarded_weight() {
        let m = random(8, 6, 3);
        let total = m.norm().powi(2);
        let svd = svd_truncate(&m, Truncation { max_rank: 3, cutoff: 0.0 }).unwrap();
        assert_eq!(svd.s.len(), 3);
        let err = (reconstruct(&svd) - m.to_matrix().unwrap()).norm_squared();
        assert!((err - svd.discarded * total).abs() < 1e-10);
    }

    #[test]
    fn keep_count_rules() {
        let w = [0.5, 0.3, 0.1, 0.1, 1e-12];
        assert_eq!(Truncation { max_rank: 10, cutoff: 1e-10 }.keep_count(&w), 4);
        // Dropping one of the two equal weights is allowed by the cutoff, but
        // the multiplet is kept whole.
        assert_eq!(Truncation { max_rank: 10, cutoff: 0.11 }.keep_count(&w), 4);
        assert_eq!(Truncation { max_rank: 10, cutoff: 0.25 }.keep_count(&w), 2);
        assert_eq!(Truncation { max_rank: 3, cutoff: 0.0 }.keep_count(&w), 3);
        assert_eq!(Truncation { max_rank: 0, cutoff: 1.0 }.keep_count(&w), 1);
        let tail = [1.0, 1e-11, 1e-12, 1e-13, 0.0, 0.0];
        assert_eq!(Truncation { max_rank: 10, cutoff: 1e-10 }.keep_count(&tail), 1);
        assert_eq!(Truncation { max_rank: 10, cutoff: 0.0 }.keep_count(&tail), 4);
    }

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let a = random(5, 5, 11).to_matrix().unwrap();
        let h = &a + a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = DMatrix::from_fn(5, 5, |i, j| if i == j { C64::new(vals[i], 0.0) } else { C64::new(0.0, 0.0) });
        assert!((&vecs * d * vecs.adjoint() - &h).norm() < 1e-10);
    }

    fn check_eigenpairs(h: &DMatrix<C64>) {
        let n = h.nrows();
        let (vals, vecs) = hermitian_eigen(h).unwrap();
        let scale = h.norm().max(1.0);
        for k in 0..n {
            let v = vecs.column(k).into_owned();
            let res = (h * &v - &v * C64::new(vals[k], 0.0)).norm();
            assert!(res < 1e-12 * scale, "column {k}: residual {res}");
        }
        assert!((vecs.adjoint() * &vecs - DMatrix::identity(n, n)).norm() < 1e-12 * n as f64);
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        for (n, seed) in [(1, 1), (2, 2), (17, 3), (64, 4)] {
            let a = random(n, n, seed).to_matrix().unwrap();
            check_eigenpairs(&(&a + a.adjoint()));
        }
        // Degenerate spectrum from a sum of commuting copies.
        let a = random(3, 3, 5).to_matrix().unwrap();
        let a = &a + a.adjoint();
        let i3 = DMatrix::identity(3, 3);
        let big = kron(&kron(&a, &i3), &i3) + kron(&kron(&i3, &a), &i3) + kron(&kron(&i3, &i3), &a);
        check_eigenpairs(&big);
        // Sparse integer matrix with a unique but hard-to-deflate ground state.
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|x| C64::new(x, 0.0)));
        let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(|x| C64::new(x, 0.0)));
        let i2 = DMatrix::identity(2, 2);
        let mut h = DMatrix::zeros(32, 32);
        for site in 0..4 {
            for op in [&sx, &sz] {
                let mut term = DMatrix::identity(1, 1);
                for k in 0..5 {
                    term = kron(&term, if k == site || k == site + 1 { op } else { &i2 });
                }
                h += term;
            }
        }
        check_eigenpairs(&h);
        check_eigenpairs(&DMatrix::zeros(6, 6));
    }

    #[test]
    fn nonfinite_input_rejected() {
        let mut m = random(2, 2, 1);
        m.set(&[0, 1], C64::new(f64::NAN, 0.0));
        assert!(matches!(svd_truncate(&m, Truncation::default()), Err(Error::NonFinite(_))));
    }
}
