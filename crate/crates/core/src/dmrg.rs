//! Two-site DMRG ground-state search.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, lanczos_solve, matmul, svd_truncate, DenseTensor, LanczosConfig, Op, Truncation};
use crate::model::env::{edge, left_update, right_update, w_left_form, w_right_form};
use crate::model::{expect_mpo, variance, Mpo};
use crate::mps::Mps;

#[derive(Clone, Debug, PartialEq)]
pub struct DmrgConfig {
    pub max_bond: usize,
    pub cutoff: f64,
    pub max_sweeps: usize,
    /// Convergence threshold on the energy change between sweeps.
    pub energy_tol: f64,
    /// Perturbation strength per sweep; the last entry repeats.
    pub noise: Vec<f64>,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self { max_bond: 100, cutoff: 1e-10, max_sweeps: 30, energy_tol: 1e-9, noise: vec![1e-5, 1e-7, 0.0], seed: 1 }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("dmrg config: {m}")));
        if self.max_bond == 0 {
            return bad("max_bond must be positive");
        }
        if !(self.cutoff >= 0.0 && self.cutoff < 1.0) {
            return bad("cutoff must lie in [0, 1)");
        }
        if !(self.energy_tol > 0.0) {
            return bad("energy_tol must be positive");
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be positive");
        }
        if self.noise.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("noise must be finite and non-negative");
        }
        Ok(())
    }

    fn noise_at(&self, sweep: usize) -> f64 {
        match self.noise.len() {
            0 => 0.0,
            n => self.noise[sweep.min(n - 1)],
        }
    }

    fn noise_finished(&self, sweep: usize) -> bool {
        self.noise_at(sweep) == 0.0 && sweep + 1 >= self.noise.len()
    }
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    /// Unit norm, canonical centre at site 0.
    pub state: Mps,
    pub energy: f64,
    pub energy_per_sweep: Vec<f64>,
    pub variance: f64,
    pub converged: bool,
    /// Gap between the two lowest Ritz values of the final local problem.
    pub local_gap: Option<f64>,
    /// Largest discarded weight of the final sweep.
    pub max_discarded: f64,
}

struct Sweeper<'a> {
    cfg: &'a DmrgConfig,
    wl: Vec<DenseTensor>,
    wr: Vec<DenseTensor>,
    state: Mps,
    left: Vec<DenseTensor>,
    right: Vec<DenseTensor>,
    local_gap: Option<f64>,
    discarded: f64,
    lanczos_seed: u64,
}

/// `H_eff θ` for the two-site block starting at `i`.
fn two_site_apply(l: &DenseTensor, w1: &DenseTensor, w2: &DenseTensor, r: &DenseTensor, shape: [usize; 4], x: &[C64]) -> Vec<C64> {
    let [k, s1, s2, k2] = shape;
    let (b, wl) = (l.shape()[0], l.shape()[1]);
    let (t1, wm) = (w1.shape()[2], w1.shape()[3]);
    let (t2, wr) = (w2.shape()[2], w2.shape()[3]);
    let b2 = r.shape()[0];
    let x1 = matmul(b * wl, k, s1 * s2 * k2, l.data(), Op::N, x, Op::N);
    let x1 = DenseTensor::from_vec(&[b, wl, s1, s2, k2], x1).unwrap().permute(&[0, 3, 4, 1, 2]).unwrap();
    let x2 = matmul(b * s2 * k2, wl * s1, t1 * wm, x1.data(), Op::N, w1.data(), Op::N);
    let x2 = DenseTensor::from_vec(&[b, s2, k2, t1, wm], x2).unwrap().permute(&[0, 2, 3, 4, 1]).unwrap();
    let x3 = matmul(b * k2 * t1, wm * s2, t2 * wr, x2.data(), Op::N, w2.data(), Op::N);
    let x3 = DenseTensor::from_vec(&[b, k2, t1, t2, wr], x3).unwrap().permute(&[0, 2, 3, 1, 4]).unwrap();
    let rr = r.permute(&[2, 1, 0]).unwrap();
    matmul(b * t1 * t2, k2 * wr, b2, x3.data(), Op::N, rr.data(), Op::N)
}

/// Perturbation `L W1 θ` with the middle MPO bond left open, as a matrix
/// `(b·t1) x (wm·s2·k2)`.
fn left_perturbation(l: &DenseTensor, w1: &DenseTensor, shape: [usize; 4], x: &[C64]) -> (usize, usize, Vec<C64>) {
    let [k, s1, s2, k2] = shape;
    let (b, wl) = (l.shape()[0], l.shape()[1]);
    let (t1, wm) = (w1.shape()[2], w1.shape()[3]);
    let x1 = matmul(b * wl, k, s1 * s2 * k2, l.data(), Op::N, x, Op::N);
    let x1 = DenseTensor::from_vec(&[b, wl, s1, s2, k2], x1).unwrap().permute(&[0, 3, 4, 1, 2]).unwrap();
    let x2 = matmul(b * s2 * k2, wl * s1, t1 * wm, x1.data(), Op::N, w1.data(), Op::N);
    let x2 = DenseTensor::from_vec(&[b, s2, k2, t1, wm], x2).unwrap().permute(&[0, 3, 4, 1, 2]).unwrap();
    (b * t1, wm * s2 * k2, x2.into_data())
}

/// Perturbation `θ W2 R` with the middle MPO bond left open, as a matrix
/// `(k·s1·wm) x (t2·b2)`; `w2` in right form `(in, right, out, left)`.
fn right_perturbation(r: &DenseTensor, w2: &DenseTensor, shape: [usize; 4], x: &[C64]) -> (usize, usize, Vec<C64>) {
    let [k, s1, s2, k2] = shape;
    let (b2, wr) = (r.shape()[0], r.shape()[1]);
    let (t2, wm) = (w2.shape()[2], w2.shape()[3]);
    let rr = r.permute(&[2, 1, 0]).unwrap();
    let x1 = matmul(k * s1 * s2, k2, wr * b2, x, Op::N, rr.data(), Op::N);
    let x1 = DenseTensor::from_vec(&[k, s1, s2, wr, b2], x1).unwrap().permute(&[0, 1, 4, 2, 3]).unwrap();
    let x2 = matmul(k * s1 * b2, s2 * wr, t2 * wm, x1.data(), Op::N, w2.data(), Op::N);
    let x2 = DenseTensor::from_vec(&[k, s1, b2, t2, wm], x2).unwrap().permute(&[0, 1, 4, 3, 2]).unwrap();
    (k * s1 * wm, t2 * b2, x2.into_data())
}

/// Gram matrix `A A†` (`rows x rows`) or `A† A` (`cols x cols`) of a
/// row-major matrix, scaled to unit trace.
fn gram(rows: usize, cols: usize, a: &[C64], row_side: bool) -> Vec<C64> {
    let g = if row_side {
        matmul(rows, cols, rows, a, Op::N, a, Op::H)
    } else {
        matmul(cols, rows, cols, a, Op::H, a, Op::N)
    };
    let n = if row_side { rows } else { cols };
    let tr: f64 = (0..n).map(|i| g[i * n + i].re).sum();
    if tr > 0.0 {
        g.into_iter().map(|z| z / tr).collect()
    } else {
        g
    }
}

/// Dominant eigenvectors of a unit-trace density matrix, as columns of an
/// `n x keep` row-major matrix, with the discarded weight.
fn dominant(n: usize, rho: Vec<C64>, trunc: Truncation) -> Result<(usize, Vec<C64>, f64)> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, &rho);
    let (vals, vecs) = hermitian_eigen(&m)?;
    let weights: Vec<f64> = vals.iter().rev().map(|v| v.max(0.0)).collect();
    let keep = trunc.keep_count(&weights);
    let total: f64 = weights.iter().sum();
    let discarded = if total > 0.0 { weights[keep..].iter().sum::<f64>() / total } else { 0.0 };
    let mut out = vec![C64::new(0.0, 0.0); n * keep];
    for c in 0..keep {
        let col = vecs.column(n - 1 - c);
        for r in 0..n {
            out[r * keep + c] = col[r];
        }
    }
    Ok((keep, out, discarded))
}

impl Sweeper<'_> {
    fn trunc(&self) -> Truncation {
        Truncation { max_rank: self.cfg.max_bond, cutoff: self.cfg.cutoff }
    }

    fn build_right(&mut self) {
        let n = self.state.n_sites();
        self.right = vec![edge(); n + 1];
        for i in (1..n).rev() {
            let a = self.state.tensor(i);
            self.right[i] = right_update(&self.right[i + 1], a, &self.wr[i], a);
        }
        self.left = vec![edge(); n + 1];
    }

    /// Optimizes sites `(i, i + 1)` and moves the centre in `direction`.
    fn step(&mut self, i: usize, rightward: bool, noise: f64, tol: f64) -> Result<f64> {
        let a = self.state.tensor(i);
        let b = self.state.tensor(i + 1);
        let (k, s1, s2, k2) = (a.shape()[0], a.shape()[1], b.shape()[1], b.shape()[2]);
        let mid = a.shape()[2];
        let theta = matmul(k * s1, mid, s2 * k2, a.data(), Op::N, b.data(), Op::N);
        let shape = [k, s1, s2, k2];
        let (l, r, w1, w2) = (&self.left[i], &self.right[i + 2], &self.wl[i], &self.wl[i + 1]);
        self.lanczos_seed = self.lanczos_seed.wrapping_add(1);
        let lcfg = LanczosConfig { tol, max_iter: 400, krylov_dim: 24, seed: self.lanczos_seed };
        let res = lanczos_solve(|x, y| y.copy_from_slice(&two_site_apply(l, w1, w2, r, shape, x)), theta.len(), Some(&theta), &lcfg)?;
        self.local_gap = res.gap;
        let theta = res.vector;
        let (rows, cols) = (k * s1, s2 * k2);
        let trunc = self.trunc();
        let (left_t, right_t, discarded) = if noise > 0.0 {
            if rightward {
                let mut rho = gram(rows, cols, &theta, true);
                let (pr, pc, p) = left_perturbation(l, w1, shape, &theta);
                debug_assert_eq!(pr, rows);
                for (x, y) in rho.iter_mut().zip(gram(pr, pc, &p, true)) {
                    *x += y * noise;
                }
                let (keep, u, disc) = dominant(rows, rho, trunc)?;
                let rest = matmul(keep, rows, cols, &u, Op::H, &theta, Op::N);
                (DenseTensor::from_vec(&[k, s1, keep], u)?, DenseTensor::from_vec(&[keep, s2, k2], rest)?, disc)
            } else {
                let mut rho = gram(rows, cols, &theta, false);
                let (pr, pc, p) = right_perturbation(r, &self.wr[i + 1], shape, &theta);
                debug_assert_eq!(pc, cols);
                for (x, y) in rho.iter_mut().zip(gram(pr, pc, &p, false)) {
                    *x += y * noise;
                }
                let (keep, w, disc) = dominant(cols, rho, trunc)?;
                let rest = matmul(rows, cols, keep, &theta, Op::N, &w, Op::N);
                // Rows of the right tensor are the conjugated eigenvectors.
                let wt = DenseTensor::from_vec(&[cols, keep], w)?.permute(&[1, 0])?.conj();
                (DenseTensor::from_vec(&[k, s1, keep], rest)?, wt.reshape(&[keep, s2, k2])?, disc)
            }
        } else {
            let svd = svd_truncate(&DenseTensor::from_vec(&[rows, cols], theta)?, trunc)?;
            let keep = svd.s.len();
            let (mut u, mut vt) = (svd.u, svd.vt);
            if rightward {
                for row in vt.data_mut().chunks_mut(cols).zip(&svd.s) {
                    row.0.iter_mut().for_each(|z| *z *= row.1);
                }
            } else {
                for row in u.data_mut().chunks_mut(keep) {
                    row.iter_mut().zip(&svd.s).for_each(|(z, s)| *z *= s);
                }
            }
            (u.reshape(&[k, s1, keep])?, vt.reshape(&[keep, s2, k2])?, svd.discarded)
        };
        self.discarded = self.discarded.max(discarded);
        self.state.set_tensor(i, left_t);
        self.state.set_tensor(i + 1, right_t);
        if rightward {
            let a = self.state.tensor(i);
            self.left[i + 1] = left_update(&self.left[i], a, &self.wl[i], a);
        } else {
            let b = self.state.tensor(i + 1);
            self.right[i + 1] = right_update(&self.right[i + 2], b, &self.wr[i + 1], b);
        }
        Ok(res.energy)
    }
}

/// Ground state of `h` by two-site sweeps from a seeded random state.
pub fn ground_state(h: &Mpo, cfg: &DmrgConfig) -> Result<DmrgResult> {
    cfg.validate()?;
    let layout = *h.layout();
    let n = layout.n_sites();
    let init = Mps::random(layout, cfg.max_bond.min(8), cfg.seed)?;
    let mut sw = Sweeper {
        cfg,
        wl: h.tensors().iter().map(w_left_form).collect(),
        wr: h.tensors().iter().map(w_right_form).collect(),
        state: init,
        left: Vec::new(),
        right: Vec::new(),
        local_gap: None,
        discarded: 0.0,
        lanczos_seed: cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15),
    };
    sw.build_right();
    let mut energies = Vec::new();
    let mut converged = false;
    for sweep in 0..cfg.max_sweeps {
        let noise = cfg.noise_at(sweep);
        let tol = if noise > 0.0 { 1e-6 } else { (10.0 * cfg.energy_tol).min(1e-6) };
        sw.discarded = 0.0;
        let mut e = f64::INFINITY;
        for i in 0..n - 1 {
            e = sw.step(i, true, noise, tol)?;
        }
        for i in (0..n - 1).rev() {
            e = sw.step(i, false, noise, tol)?;
        }
        let prev = energies.last().copied();
        energies.push(e);
        if let Some(p) = prev {
            if cfg.noise_finished(sweep) && (p - e).abs() < cfg.energy_tol {
                converged = true;
                break;
            }
        }
    }
    let mut state = sw.state;
    state.set_center(Some(0));
    let state = state.normalized()?;
    let energy = expect_mpo(h, &state)?;
    let var = variance(h, &state)?;
    Ok(DmrgResult {
        state,
        energy,
        energy_per_sweep: energies,
        variance: var,
        converged,
        local_gap: sw.local_gap,
        max_discarded: sw.discarded,
    })
}
