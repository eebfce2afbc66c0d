//! Exponential-cost reference computations on dense state vectors.
//!
//! Everything here is built directly from the definitions (Kronecker-style
//! Hamiltonians, explicit outcome enumeration with numerically tracked
//! byproducts) and shares no contraction code with the MPS formulas.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{dot, hermitian_eigen, lanczos_solve, norm, LanczosConfig};
use crate::model::{HamiltonianSpec, ModelKind};
use crate::mps::{ChainLayout, Mps, DEFAULT_DENSE_CAP};
use crate::protocol::Protocol;
use crate::spin_ops::{basis_vector, identity, pauli, rotation_gate, spin1, spin1_rotation, spin_half, Axis, Matrix, Vector};

/// Longest chain (spin-1 sites) the outcome enumeration accepts.
pub const MAX_ENUMERATION_SITES: usize = 8;

/// Dimension up to which ground states come from full diagonalization.
const DENSE_EIGEN_MAX: usize = 400;

const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    layout: ChainLayout,
    amplitudes: Vec<C64>,
}

impl DenseState {
    /// Normalizes `amplitudes`, which must be ordered lexicographically by site.
    pub fn new(layout: ChainLayout, mut amplitudes: Vec<C64>) -> Result<Self> {
        let dim = layout.total_dim().unwrap_or(usize::MAX);
        if amplitudes.len() != dim {
            return Err(Error::Shape(format!("{} amplitudes for dimension {dim}", amplitudes.len())));
        }
        let n = norm(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonFinite("dense state norm"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(Self { layout, amplitudes })
    }

    pub fn from_mps(state: &Mps) -> Result<Self> {
        Self::new(*state.layout(), state.to_dense(DEFAULT_DENSE_CAP)?)
    }

    pub fn layout(&self) -> &ChainLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `<ψ| Π op_site |ψ>` with one operator per listed site.
    pub fn expect(&self, ops: &[(usize, Matrix)]) -> Result<C64> {
        let dims = self.layout.local_dims();
        let mut w = self.amplitudes.clone();
        for (site, op) in ops {
            self.layout.check_site(*site)?;
            if op.nrows() != dims[*site] || op.ncols() != dims[*site] {
                return Err(Error::Shape(format!("operator does not fit site {site}")));
            }
            w = apply_local(&dims, *site, op, &w);
        }
        Ok(dot(&self.amplitudes, &w))
    }
}

/// Applies an operator spanning consecutive sites from `site` on.
fn apply_local(dims: &[usize], site: usize, op: &Matrix, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    apply_local_add(dims, site, op, x, &mut y);
    y
}

fn apply_local_add(dims: &[usize], site: usize, op: &Matrix, x: &[C64], y: &mut [C64]) {
    let span = op.nrows();
    let mut end = site;
    let mut covered = 1;
    while covered < span {
        covered *= dims[end];
        end += 1;
    }
    let inner: usize = dims[end..].iter().product();
    let outer = x.len() / (span * inner);
    let mut buf = vec![C64::new(0.0, 0.0); span];
    for o in 0..outer {
        for r in 0..inner {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = x[(o * span + j) * inner + r];
            }
            for i in 0..span {
                let mut s = C64::new(0.0, 0.0);
                for (j, b) in buf.iter().enumerate() {
                    s += op[(i, j)] * b;
                }
                y[(o * span + i) * inner + r] += s;
            }
        }
    }
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Hamiltonian as local blocks `(first site, operator over 1 or 2 sites)`.
pub fn hamiltonian_terms(spec: &HamiltonianSpec) -> Result<Vec<(usize, Matrix)>> {
    let layout = spec.layout()?;
    let n = layout.n_spin1();
    let dims = layout.local_dims();
    let s = |site: usize, a: Axis| if dims[site] == 2 { spin_half(a) } else { spin1(a) };
    let heis = |i: usize, cx: f64, cy: f64, cz: f64| -> (usize, Matrix) {
        let m = kron(&s(i, Axis::X), &s(i + 1, Axis::X)) * C64::new(cx, 0.0)
            + kron(&s(i, Axis::Y), &s(i + 1, Axis::Y)) * C64::new(cy, 0.0)
            + kron(&s(i, Axis::Z), &s(i + 1, Axis::Z)) * C64::new(cz, 0.0);
        (i, m)
    };
    let single_ion = |i: usize, a: Axis, d: f64| -> (usize, Matrix) {
        let m = spin1(a);
        (i, &m * &m * C64::new(d, 0.0))
    };
    let mut terms = Vec::new();
    match spec.kind {
        ModelKind::Aklt | ModelKind::Blbq { .. } => {
            let alpha = match spec.kind {
                ModelKind::Blbq { alpha } => alpha,
                _ => 1.0 / 3.0,
            };
            terms.push(heis(0, 1.0, 1.0, 1.0));
            for i in 1..n {
                let (_, b) = heis(i, 1.0, 1.0, 1.0);
                terms.push((i, &b + &b * &b * C64::new(alpha, 0.0)));
            }
            terms.push(heis(n, 1.0, 1.0, 1.0));
        }
        ModelKind::Xxz { j, d } => {
            for i in 0..=n {
                terms.push(heis(i, 1.0, 1.0, j));
            }
            for i in 1..=n {
                terms.push(single_ion(i, Axis::Z, d));
            }
        }
        ModelKind::Blocked { j, d, junction: nj } => {
            let b = spec.length / 3;
            let a_sites = 1..=b;
            let b_sites = b + nj + 1..=2 * b + nj;
            let c_sites = 2 * b + 2 * nj + 1..=n;
            terms.push(heis(0, 1.0, 1.0, j));
            for i in a_sites.clone() {
                terms.push(single_ion(i, Axis::Z, d));
                if i < b {
                    terms.push(heis(i, 1.0, 1.0, j));
                }
            }
            for i in b..=b + nj {
                terms.push(heis(i, 1.0, 1.0, 1.0));
            }
            for i in b_sites.clone() {
                terms.push(single_ion(i, Axis::Y, d));
                if i < *b_sites.end() {
                    terms.push(heis(i, 1.0, j, 1.0));
                }
            }
            for i in 2 * b + nj..=2 * b + 2 * nj {
                terms.push(heis(i, 1.0, 1.0, 1.0));
            }
            for i in c_sites.clone() {
                terms.push(single_ion(i, Axis::X, d));
                if i < n {
                    terms.push(heis(i, j, 1.0, 1.0));
                }
            }
            terms.push(heis(n, j, 1.0, 1.0));
        }
    }
    Ok(terms)
}

fn apply_hamiltonian(terms: &[(usize, Matrix)], dims: &[usize], x: &[C64], y: &mut [C64]) {
    y.fill(C64::new(0.0, 0.0));
    for (site, op) in terms {
        apply_local_add(dims, *site, op, x, y);
    }
}

/// Dense Hamiltonian matrix for small chains.
pub fn dense_hamiltonian(spec: &HamiltonianSpec, cap: usize) -> Result<Matrix> {
    let layout = spec.layout()?;
    let dims = layout.local_dims();
    let dim = layout.total_dim().unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let terms = hamiltonian_terms(spec)?;
    let mut h = Matrix::zeros(dim, dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = C64::new(1.0, 0.0);
        apply_hamiltonian(&terms, &dims, &e, &mut col);
        for i in 0..dim {
            h[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct ExactGroundState {
    pub state: DenseState,
    pub energy: f64,
    /// Distance to the next eigenvalue.
    pub gap: f64,
    pub degenerate: bool,
}

/// Lowest eigenpair of the model, dense for small dimensions and Lanczos otherwise.
pub fn exact_ground_state(spec: &HamiltonianSpec, cap: usize) -> Result<ExactGroundState> {
    let layout = spec.layout()?;
    let dims = layout.local_dims();
    let dim = layout.total_dim().unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    if dim <= DENSE_EIGEN_MAX {
        let h = dense_hamiltonian(spec, cap)?;
        let (vals, vecs) = hermitian_eigen(&h)?;
        let gap = vals.get(1).map_or(f64::INFINITY, |v| v - vals[0]);
        let state = DenseState::new(layout, vecs.column(0).iter().copied().collect())?;
        return Ok(ExactGroundState {
            state,
            energy: vals[0],
            gap,
            degenerate: gap < DEGENERACY_TOL * vals[0].abs().max(1.0),
        });
    }
    let terms = hamiltonian_terms(spec)?;
    let cfg = LanczosConfig { tol: 1e-10, max_iter: 20_000, krylov_dim: 60, seed: 17 };
    let ground = lanczos_solve(|x, y| apply_hamiltonian(&terms, &dims, x, y), dim, None, &cfg)?;
    if !ground.converged {
        return Err(Error::NotConverged { iterations: ground.iterations, residual: ground.residual });
    }
    let g = ground.vector.clone();
    let shift = 10.0 * (1.0 + ground.energy.abs());
    let second = lanczos_solve(
        |x, y| {
            apply_hamiltonian(&terms, &dims, x, y);
            let c = dot(&g, x) * shift;
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi += c * gi;
            }
        },
        dim,
        None,
        &LanczosConfig { seed: 18, ..cfg },
    )?;
    let gap = second.energy - ground.energy;
    Ok(ExactGroundState {
        state: DenseState::new(layout, ground.vector)?,
        energy: ground.energy,
        gap,
        degenerate: gap < DEGENERACY_TOL * ground.energy.abs().max(1.0),
    })
}

/// Density matrix of the (input, output) qubit pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitDensityMatrix(pub Matrix);

impl TwoQubitDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let m = &self.0;
        if (m - m.adjoint()).norm() > tol || (self.trace() - 1.0).abs() > tol {
            return false;
        }
        hermitian_eigen(m).map(|(vals, _)| vals[0] > -tol).unwrap_or(false)
    }
}

/// `|φ+> = (|00> + |11>)/√2` over (input, output).
pub fn bell_state() -> Vector {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    Vector::from_vec(vec![r, C64::new(0.0, 0.0), C64::new(0.0, 0.0), r])
}

/// `(I ⊗ U)|φ+>`.
pub fn target_state(gate: &Matrix) -> Vector {
    kron(&identity(2), gate) * bell_state()
}

/// `<ψ_U| ρ |ψ_U>`.
pub fn fidelity_from_rho(rho: &TwoQubitDensityMatrix, gate: &Matrix) -> f64 {
    let psi = target_state(gate);
    psi.dotc(&(&rho.0 * &psi)).re
}

/// One measured site of a branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub site: usize,
    pub axis: Axis,
    /// Signed rotation angle of the basis the site was measured in.
    pub angle: f64,
    pub success: bool,
}

/// A complete outcome sequence with its weight and the applied correction.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    /// Correction applied to the output qubit.
    pub correction: Matrix,
}

fn aklt_lambda() -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0].map(|x| C64::new(x * FRAC_1_SQRT_2, 0.0)))
}

/// `Γ^m` with `m` in basis order `+, 0, -`.
fn aklt_gamma(m: usize) -> Matrix {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    let e = match m {
        0 => [2.0 * a, 0.0, 0.0, 0.0],
        1 => [0.0, b, b, 0.0],
        _ => [0.0, 0.0, 0.0, 2.0 * a],
    };
    Matrix::from_row_slice(2, 2, &e.map(|x| C64::new(x, 0.0)))
}

/// Scales a 2x2 matrix to unit determinant modulus.
fn unitize(k: Matrix) -> Matrix {
    let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
    k / C64::new(det.norm().sqrt(), 0.0)
}

/// Logical action of measuring a spin-1 site in state `v` on the ideal chain.
fn kraus(v: &Vector) -> Matrix {
    let g = (0..3).fold(Matrix::zeros(2, 2), |acc, m| acc + aklt_gamma(m) * v[m].conj());
    unitize(aklt_lambda() * g)
}

fn is_pauli(m: &Matrix) -> bool {
    [identity(2), pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)]
        .iter()
        .any(|p| ((p.adjoint() * m).trace().norm() - 2.0).abs() < 1e-8)
}

struct Enumerator<'a, F> {
    protocol: &'a Protocol,
    n: usize,
    visit: F,
    outcomes: Vec<Outcome>,
}

impl<F: FnMut(&Branch, &[C64])> Enumerator<'_, F> {
    /// `amp` holds the amplitudes over (input, remaining spin-1 sites, output).
    fn recurse(&mut self, site: usize, amp: &[C64], w: &Matrix, g: &Matrix, done: &mut [bool]) -> Result<()> {
        if site > self.n {
            let correction = g * w.adjoint();
            // amp is (input, output); apply the correction on the output qubit.
            let mut out = vec![C64::new(0.0, 0.0); 4];
            for i in 0..2 {
                for o in 0..2 {
                    out[i * 2 + o] = (0..2).map(|k| correction[(o, k)] * amp[i * 2 + k]).sum();
                }
            }
            let probability = norm(amp).powi(2);
            let branch = Branch { outcomes: self.outcomes.clone(), probability, correction };
            (self.visit)(&branch, &out);
            return Ok(());
        }
        let stage_idx = self.protocol.stage_of(site).ok_or(Error::SiteOutOfRange { site, sites: self.n + 2 })?;
        let stage = &self.protocol.stages[stage_idx];
        let mut basis: Vec<(Axis, Vector, bool, f64)> = Vec::with_capacity(3);
        match stage.rotation {
            Some((axis, alpha)) if !done[stage_idx] => {
                let frame = w * g.adjoint();
                let target = rotation_gate(axis, alpha).adjoint();
                let mut chosen = None;
                for beta in [alpha, -alpha] {
                    let u = spin1_rotation(axis, beta / 2.0);
                    let ok = Axis::ALL
                        .iter()
                        .filter(|&&nu| nu != axis)
                        .all(|&nu| is_pauli(&(kraus(&(&u * basis_vector(nu))) * &frame * &target)));
                    if ok {
                        chosen = Some((beta, u));
                        break;
                    }
                }
                let (beta, u) = chosen.ok_or_else(|| Error::InvalidModel("no adaptive angle keeps the frame Pauli".into()))?;
                for nu in Axis::ALL {
                    basis.push((nu, &u * basis_vector(nu), nu != axis, beta));
                }
            }
            _ => {
                for nu in Axis::ALL {
                    basis.push((nu, basis_vector(nu), false, 0.0));
                }
            }
        }
        let rest = amp.len() / 6;
        let mut projected = vec![C64::new(0.0, 0.0); 2 * rest];
        for (nu, v, success, beta) in basis {
            for i in 0..2 {
                for r in 0..rest {
                    projected[i * rest + r] = (0..3).map(|m| v[m].conj() * amp[(i * 3 + m) * rest + r]).sum();
                }
            }
            let w2 = kraus(&v) * w;
            let g2 = match (success, stage.rotation) {
                (true, Some((axis, alpha))) => rotation_gate(axis, alpha) * g,
                _ => g.clone(),
            };
            let was_done = done[stage_idx];
            done[stage_idx] |= success;
            self.outcomes.push(Outcome { site, axis: nu, angle: beta, success });
            let r = self.recurse(site + 1, &projected.clone(), &w2, &g2, done);
            self.outcomes.pop();
            done[stage_idx] = was_done;
            r?;
        }
        Ok(())
    }
}

/// Visits every outcome sequence of `protocol` on `state`, depth first.
///
/// The callback receives the branch and its corrected, unnormalized
/// (input, output) amplitudes.
pub fn enumerate_branches<F>(state: &DenseState, protocol: &Protocol, visit: F) -> Result<()>
where
    F: FnMut(&Branch, &[C64]),
{
    if state.layout.local_dims() != protocol.layout.local_dims() {
        return Err(Error::Shape("protocol and state live on different layouts".into()));
    }
    let n = state.layout.n_spin1();
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::DimensionCap { dim: n, cap: MAX_ENUMERATION_SITES });
    }
    let mut e = Enumerator { protocol, n, visit, outcomes: Vec::with_capacity(n) };
    let w0 = unitize(aklt_lambda());
    let mut done = vec![false; protocol.stages.len()];
    e.recurse(1, &state.amplitudes, &w0, &identity(2), &mut done)
}

/// Post-protocol (input, output) density matrix summed over all outcomes.
pub fn enumerate_rho_u(state: &DenseState, protocol: &Protocol) -> Result<TwoQubitDensityMatrix> {
    let mut rho = Matrix::zeros(4, 4);
    enumerate_branches(state, protocol, |_, out| {
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] += out[i] * out[j].conj();
            }
        }
    })?;
    Ok(TwoQubitDensityMatrix(rho))
}

/// Gate fidelity of `protocol` on `state` by explicit enumeration.
pub fn oracle_fidelity(state: &DenseState, protocol: &Protocol) -> Result<f64> {
    let rho = enumerate_rho_u(state, protocol)?;
    Ok(fidelity_from_rho(&rho, &protocol.gate.matrix()))
}

/// Byproduct `X^(N_x + 1) Z^(N_z + 1)` for unrotated outcomes, where a `y`
/// outcome counts towards both `N_x` and `N_z`.
pub fn counted_byproduct(outcomes: &[Axis]) -> Matrix {
    let nx = outcomes.iter().filter(|&&a| a != Axis::Z).count();
    let nz = outcomes.iter().filter(|&&a| a != Axis::X).count();
    let pow = |p: Matrix, k: usize| if k % 2 == 1 { p } else { identity(2) };
    pow(pauli(Axis::X), nx + 1) * pow(pauli(Axis::Z), nz + 1)
}
