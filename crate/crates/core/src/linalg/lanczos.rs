use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::decomp::hermitian_eigen;

const BREAKDOWN: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosConfig {
    /// Target residual norm `|H x - E x|`.
    pub tol: f64,
    /// Maximum number of operator applications.
    pub max_iter: usize,
    /// Krylov space size before restarting from the current Ritz vector.
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 2000, krylov_dim: 40, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub energy: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    /// Distance to the second Ritz value of the last Krylov space.
    pub gap: Option<f64>,
    pub converged: bool,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(x: &mut [C64], a: f64) {
    for z in x {
        *z *= a;
    }
}

/// Orthogonalizes `w` against `basis` (two passes) and returns its remaining norm.
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
    norm(w)
}

pub(crate) fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Lowest eigenpair of a Hermitian operator given only through `apply`.
pub fn lanczos_ground<F>(apply: F, dim: usize, tol: f64, max_iter: usize, seed: u64) -> Result<LanczosResult>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let cfg = LanczosConfig { tol, max_iter, seed, ..LanczosConfig::default() };
    let res = lanczos_solve(apply, dim, None, &cfg)?;
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NotConverged { iterations: res.iterations, residual: res.residual })
    }
}

/// Thick-restarted Lanczos with full reorthogonalization.
///
/// Non-convergence is reported through [`LanczosResult::converged`] rather than
/// as an error so callers can keep the best estimate.
pub fn lanczos_solve<F>(mut apply: F, dim: usize, initial: Option<&[C64]>, cfg: &LanczosConfig) -> Result<LanczosResult>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if dim == 0 {
        return Err(Error::Shape("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = match initial {
        Some(v) if v.len() != dim => {
            return Err(Error::Shape(format!("initial vector of length {} for dimension {}", v.len(), dim)));
        }
        Some(v) if norm(v) > BREAKDOWN && norm(v).is_finite() => {
            let mut v = v.to_vec();
            let n = norm(&v);
            scale(&mut v, 1.0 / n);
            v
        }
        _ => random_vector(dim, &mut rng),
    };
    let m_max = cfg.krylov_dim.max(4).min(dim);
    let keep = (m_max / 4).max(1);
    let mut basis: Vec<Vec<C64>> = vec![start];
    let mut images: Vec<Vec<C64>> = Vec::new();
    // Projected matrix, stored densely as basis.len() grows.
    let mut proj: Vec<Vec<C64>> = Vec::new();
    let mut iterations = 0usize;
    loop {
        let j = images.len();
        let mut hv = vec![C64::new(0.0, 0.0); dim];
        apply(&basis[j], &mut hv);
        iterations += 1;
        let row: Vec<C64> = basis.iter().map(|v| dot(v, &hv)).collect();
        if row.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("lanczos"));
        }
        images.push(hv);
        proj.push(row);
        let n = basis.len();
        let t = DMatrix::from_fn(n, n, |r, c| {
            if r >= c {
                proj[r][c].conj()
            } else {
                proj[c][r]
            }
        });
        let (vals, vecs) = hermitian_eigen(&t)?;
        let mut x = combine(&basis, vecs.column(0).iter());
        let mut hx = combine(&images, vecs.column(0).iter());
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        scale(&mut hx, 1.0 / nx);
        let energy = dot(&x, &hx).re;
        let mut r = hx;
        axpy(&mut r, C64::new(-energy, 0.0), &x);
        let residual = norm(&r);
        let gap = (n > 1).then(|| vals[1] - vals[0]);
        // A single vector is never accepted: an exact eigenvector start must
        // still be tested against a fresh direction.
        let converged = residual <= cfg.tol && (n > 1 || dim == 1);
        if converged || iterations >= cfg.max_iter || (n == dim && residual <= cfg.tol.max(1e-8)) {
            return Ok(LanczosResult { energy, vector: x, residual, iterations, gap, converged });
        }
        if n == m_max {
            let k = keep.min(n);
            let new_basis: Vec<Vec<C64>> = (0..k).map(|c| combine(&basis, vecs.column(c).iter())).collect();
            let new_images: Vec<Vec<C64>> = (0..k).map(|c| combine(&images, vecs.column(c).iter())).collect();
            basis = new_basis;
            images = new_images;
            proj = (0..k)
                .map(|r| (0..=r).map(|c| if r == c { C64::new(vals[r], 0.0) } else { C64::new(0.0, 0.0) }).collect())
                .collect();
        }
        let mut w = r;
        let mut b = orthogonalize(&mut w, &basis);
        if b < BREAKDOWN * (1.0 + energy.abs()) {
            // Invariant subspace reached: continue from a fresh direction.
            w = random_vector(dim, &mut rng);
            b = orthogonalize(&mut w, &basis);
            if b < BREAKDOWN {
                return Ok(LanczosResult { energy, vector: x, residual, iterations, gap, converged });
            }
        }
        scale(&mut w, 1.0 / b);
        basis.push(w);
    }
}

fn combine<'a>(vectors: &[Vec<C64>], coeffs: impl Iterator<Item = &'a C64>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); vectors[0].len()];
    for (v, c) in vectors.iter().zip(coeffs) {
        axpy(&mut out, *c, v);
    }
    out
}
