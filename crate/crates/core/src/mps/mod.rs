//! Matrix product states over chains with qubit ends and spin-1 bulk.

pub(crate) mod env;
mod io;
mod layout;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{matmul, svd_truncate, DenseTensor, Op, Truncation};
use crate::spin_ops::{pauli, Axis, Matrix};

use env::{left_edge, left_step};
pub use io::{read_mps, write_mps, FORMAT_VERSION};
pub use layout::{ChainLayout, Region, Segment};

/// Largest dense dimension produced by [`Mps::to_dense`] unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 4 * 6561;

/// Site-local operator product; sites not listed carry the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorString {
    terms: BTreeMap<usize, Matrix>,
}

impl OperatorString {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multiplies `op` onto `site` (applied after any operator already there).
    pub fn with(mut self, site: usize, op: Matrix) -> Self {
        self.push(site, op);
        self
    }

    pub fn push(&mut self, site: usize, op: Matrix) {
        let merged = match self.terms.remove(&site) {
            Some(prev) => op * prev,
            None => op,
        };
        self.terms.insert(site, merged);
    }

    pub fn get(&self, site: usize) -> Option<&Matrix> {
        self.terms.get(&site)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &Matrix)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn validate(&self, layout: &ChainLayout) -> Result<()> {
        for (&site, op) in &self.terms {
            layout.check_site(site)?;
            let d = layout.local_dim(site);
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::Shape(format!(
                    "operator of size {}x{} on site {} with local dimension {}",
                    op.nrows(),
                    op.ncols(),
                    site,
                    d
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    layout: ChainLayout,
    tensors: Vec<DenseTensor>,
    center: Option<usize>,
}

impl Mps {
    pub fn new(layout: ChainLayout, tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.len() != layout.n_sites() {
            return Err(Error::Shape(format!("{} tensors for {} sites", tensors.len(), layout.n_sites())));
        }
        let mut left = 1;
        for (site, t) in tensors.iter().enumerate() {
            let s = t.shape();
            if s.len() != 3 || s[0] != left || s[1] != layout.local_dim(site) {
                return Err(Error::Shape(format!("site {site} tensor has shape {s:?}")));
            }
            left = s[2];
        }
        if left != 1 {
            return Err(Error::Shape("right boundary bond must be 1".into()));
        }
        Ok(Self { layout, tensors, center: None })
    }

    pub fn layout(&self) -> &ChainLayout {
        &self.layout
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn tensor(&self, site: usize) -> &DenseTensor {
        &self.tensors[site]
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub(crate) fn set_tensor(&mut self, site: usize, t: DenseTensor) {
        self.tensors[site] = t;
        self.center = None;
    }

    pub(crate) fn set_center(&mut self, center: Option<usize>) {
        self.center = center;
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    pub fn scale(&mut self, c: C64) {
        let site = self.center.unwrap_or(0);
        self.tensors[site].scale(c);
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonFinite("state norm"));
        }
        self.scale(C64::new(1.0 / n, 0.0));
        Ok(self)
    }

    /// Returns a copy in mixed canonical form around `center`.
    pub fn canonicalize(&self, center: usize) -> Result<Self> {
        let mut out = self.clone();
        out.canonicalize_mut(center)?;
        Ok(out)
    }

    pub(crate) fn canonicalize_mut(&mut self, center: usize) -> Result<()> {
        self.layout.check_site(center)?;
        for site in 0..center {
            self.left_orthonormalize(site)?;
        }
        for site in (center + 1..self.n_sites()).rev() {
            self.right_orthonormalize(site)?;
        }
        self.center = Some(center);
        Ok(())
    }

    /// Makes `site` a left isometry, pushing the remainder into `site + 1`.
    pub(crate) fn left_orthonormalize(&mut self, site: usize) -> Result<()> {
        let t = &self.tensors[site];
        let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let m = DMatrix::from_row_slice(dl * d, dr, t.data());
        let (q, r) = positive_qr(m);
        let k = q.ncols();
        self.tensors[site] = DenseTensor::from_matrix(&q).reshape(&[dl, d, k])?;
        let next = &self.tensors[site + 1];
        let (nd, nr) = (next.shape()[1], next.shape()[2]);
        let r = DenseTensor::from_matrix(&r);
        let data = matmul(k, dr, nd * nr, r.data(), Op::N, next.data(), Op::N);
        self.tensors[site + 1] = DenseTensor::from_vec(&[k, nd, nr], data)?;
        Ok(())
    }

    /// Makes `site` a right isometry, pushing the remainder into `site - 1`.
    pub(crate) fn right_orthonormalize(&mut self, site: usize) -> Result<()> {
        let t = &self.tensors[site];
        let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let m = DMatrix::from_row_slice(dl, d * dr, t.data());
        let (q, r) = positive_qr(m.adjoint());
        let k = q.ncols();
        self.tensors[site] = DenseTensor::from_matrix(&q.adjoint()).reshape(&[k, d, dr])?;
        let prev = &self.tensors[site - 1];
        let (pl, pd) = (prev.shape()[0], prev.shape()[1]);
        let r = DenseTensor::from_matrix(&r);
        let data = matmul(pl * pd, dl, k, prev.data(), Op::N, r.data(), Op::H);
        self.tensors[site - 1] = DenseTensor::from_vec(&[pl, pd, k], data)?;
        Ok(())
    }

    /// Dense coefficients in lexicographic site order (site 0 most significant).
    pub fn to_dense(&self, cap: usize) -> Result<Vec<C64>> {
        let dim = self.layout.total_dim().unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let mut acc = vec![C64::new(1.0, 0.0)];
        let mut rows = 1;
        for t in &self.tensors {
            let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            acc = matmul(rows, dl, d * dr, &acc, Op::N, t.data(), Op::N);
            rows *= d;
        }
        Ok(acc)
    }

    /// Exact (or truncated) MPS of a dense vector by successive SVDs.
    pub fn from_dense(layout: ChainLayout, coeffs: &[C64], trunc: Truncation) -> Result<Self> {
        let dims = layout.local_dims();
        let dim: usize = dims.iter().product();
        if coeffs.len() != dim {
            return Err(Error::Shape(format!("{} coefficients for dimension {}", coeffs.len(), dim)));
        }
        let mut tensors = Vec::with_capacity(dims.len());
        let mut rest = DenseTensor::from_vec(&[1, dim], coeffs.to_vec())?;
        let mut left = 1;
        for &d in &dims[..dims.len() - 1] {
            let cols = rest.len() / (left * d);
            let m = rest.reshape(&[left * d, cols])?;
            let svd = svd_truncate(&m, trunc)?;
            let k = svd.s.len();
            tensors.push(svd.u.reshape(&[left, d, k])?);
            let mut vt = svd.vt;
            for (r, s) in svd.s.iter().enumerate() {
                for x in &mut vt.data_mut()[r * cols..(r + 1) * cols] {
                    *x *= s;
                }
            }
            rest = vt;
            left = k;
        }
        let d = *dims.last().unwrap();
        tensors.push(rest.reshape(&[left, d, 1])?);
        let mut out = Self::new(layout, tensors)?;
        out.center = Some(dims.len() - 1);
        Ok(out)
    }

    /// Random state with bond dimension up to `bond`, normalized and right-canonical.
    pub fn random(layout: ChainLayout, bond: usize, seed: u64) -> Result<Self> {
        let dims = layout.local_dims();
        let n = dims.len();
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = dims[..i].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
            let right: usize = dims[i..].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
            bonds[i] = bond.max(1).min(left).min(right);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = (0..n)
            .map(|i| {
                DenseTensor::from_fn(&[bonds[i], dims[i], bonds[i + 1]], |_| {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        let mut out = Self::new(layout, tensors)?;
        out.canonicalize_mut(0)?;
        out.normalized()
    }
}

/// QR with a non-negative real diagonal in `R`, making the factorization unique.
fn positive_qr(m: DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let qr = m.qr();
    let (mut q, mut r) = (qr.q(), qr.r());
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(i).iter_mut().for_each(|x| *x *= phase);
            r.row_mut(i).iter_mut().for_each(|x| *x *= phase.conj());
        }
    }
    (q, r)
}

/// `<a|b>` by a left-to-right transfer contraction.
pub fn inner(a: &Mps, b: &Mps) -> Result<C64> {
    if a.layout.local_dims() != b.layout.local_dims() {
        return Err(Error::Shape("states live on different layouts".into()));
    }
    let mut env = left_edge();
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        env = left_step(&env, ta, tb, None);
    }
    Ok(env.data()[0])
}

/// `<state| Π_site op_site |state>` without normalization.
pub fn expect_string(state: &Mps, ops: &OperatorString) -> Result<C64> {
    ops.validate(&state.layout)?;
    let mut env = left_edge();
    for (site, t) in state.tensors.iter().enumerate() {
        env = left_step(&env, t, t, ops.get(site));
    }
    Ok(env.data()[0])
}

/// AKLT bond matrix `Λ = XZ/√2`.
pub fn aklt_lambda() -> Matrix {
    pauli(Axis::X) * pauli(Axis::Z) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// AKLT projector matrices `Γ^m` for `m = +, 0, -` (basis order).
pub fn aklt_gamma() -> [Matrix; 3] {
    let id = Matrix::identity(2, 2);
    let z = pauli(Axis::Z);
    let c = C64::new(1.0 / 3f64.sqrt(), 0.0);
    [(&id + &z) * c, pauli(Axis::X) * C64::new((2.0f64 / 3.0).sqrt(), 0.0), (&id - &z) * c]
}

/// AKLT state with end qubits on an arbitrary layout, before normalization.
pub fn aklt_mps_unnormalized(layout: ChainLayout) -> Result<Mps> {
    let lambda = aklt_lambda();
    let gamma = aklt_gamma();
    let n = layout.n_sites();
    let mut tensors = Vec::with_capacity(n);
    tensors.push(DenseTensor::from_fn(&[1, 2, 2], |i| lambda[(i[1], i[2])]));
    let bulk: Vec<Matrix> = gamma.iter().map(|g| g * &lambda).collect();
    for _ in 1..n - 1 {
        tensors.push(DenseTensor::from_fn(&[2, 3, 2], |i| bulk[i[1]][(i[0], i[2])]));
    }
    tensors.push(DenseTensor::from_fn(&[2, 2, 1], |i| {
        if i[0] == i[1] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }));
    Mps::new(layout, tensors)
}

pub fn aklt_mps_on(layout: ChainLayout) -> Result<Mps> {
    aklt_mps_unnormalized(layout)?.normalized()
}

/// Normalized AKLT chain of `length` spin-1 sites with end qubits.
pub fn aklt_mps(length: usize) -> Result<Mps> {
    aklt_mps_on(ChainLayout::uniform(length)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_ops::{basis_vector, parity_op, spin1, Spin};

    const CAP: usize = DEFAULT_DENSE_CAP;

    fn dense_expect(v: &[C64], layout: &ChainLayout, ops: &OperatorString) -> C64 {
        let dims = layout.local_dims();
        let mut w = v.to_vec();
        for (&site, op) in ops.iter() {
            let inner: usize = dims[site + 1..].iter().product();
            let d = dims[site];
            let outer = v.len() / (inner * d);
            let mut next = vec![C64::new(0.0, 0.0); v.len()];
            for o in 0..outer {
                for i in 0..d {
                    for j in 0..d {
                        for r in 0..inner {
                            next[(o * d + i) * inner + r] += op[(i, j)] * w[(o * d + j) * inner + r];
                        }
                    }
                }
            }
            w = next;
        }
        v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
    }

    /// AKLT with one spin-1 site from singlets and the symmetric projector.
    fn aklt_one_site_by_hand() -> Vec<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // |ψ-> = (|01> - |10>)/√2 on (in, a) and (b, out); spin-1 from (a, b).
        let singlet = |x: usize, y: usize| match (x, y) {
            (0, 1) => r,
            (1, 0) => -r,
            _ => 0.0,
        };
        let proj = |m: usize, a: usize, b: usize| match (m, a, b) {
            (0, 0, 0) | (2, 1, 1) => 1.0,
            (1, 0, 1) | (1, 1, 0) => r,
            _ => 0.0,
        };
        let mut v = vec![C64::new(0.0, 0.0); 12];
        for i in 0..2 {
            for m in 0..3 {
                for o in 0..2 {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            s += singlet(i, a) * proj(m, a, b) * singlet(b, o);
                        }
                    }
                    v[(i * 3 + m) * 2 + o] = C64::new(s, 0.0);
                }
            }
        }
        v
    }

    fn proportional(a: &[C64], b: &[C64]) -> bool {
        let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        (ov.norm() - na * nb).abs() < 1e-10 * na * nb
    }

    #[test]
    fn aklt_single_site_matches_singlet_construction() {
        let v = aklt_mps(1).unwrap().to_dense(CAP).unwrap();
        assert_eq!(v.len(), 12);
        assert!(proportional(&v, &aklt_one_site_by_hand()));
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aklt_unnormalized_norm() {
        let layout = ChainLayout::uniform(2).unwrap();
        let raw = aklt_mps_unnormalized(layout).unwrap();
        let dense = raw.to_dense(CAP).unwrap();
        let n: f64 = dense.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // The bare tensors already give a unit vector; the singlet-projector
        // form carries the triplet weight 3/4 per site.
        assert!((raw.norm() - 1.0).abs() < 1e-12);
        assert!((raw.norm() - n).abs() < 1e-12);
        let by_hand: f64 = aklt_one_site_by_hand().iter().map(|z| z.norm_sqr()).sum();
        assert!((by_hand - 0.75).abs() < 1e-12);
        let normed = aklt_mps(2).unwrap();
        let ov = inner(&normed, &Mps::from_dense(layout, &dense, Truncation::default()).unwrap()).unwrap();
        assert!((ov.norm() - n).abs() < 1e-10);
    }

    #[test]
    fn aklt_global_symmetry() {
        for l in 1..=6 {
            let s = aklt_mps(l).unwrap();
            for mu in Axis::ALL {
                let mut ops = OperatorString::new().with(0, pauli(mu)).with(l + 1, pauli(mu));
                for site in 1..=l {
                    ops.push(site, parity_op(mu, Spin::One));
                }
                let v = expect_string(&s, &ops).unwrap();
                assert!((v + 1.0).norm() < 1e-10, "L={l} {mu}: {v}");
            }
        }
    }

    #[test]
    fn aklt_all_zero_probability() {
        let z = basis_vector(Axis::Z);
        let pz = &z * z.adjoint();
        for l in 1..=6 {
            let s = aklt_mps(l).unwrap();
            let mut ops = OperatorString::new();
            for site in 1..=l {
                ops.push(site, pz.clone());
            }
            let v = expect_string(&s, &ops).unwrap();
            assert!((v.re - 3f64.powi(-(l as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_symmetry_relation() {
        let lambda = aklt_lambda();
        let gamma = aklt_gamma();
        for mu in Axis::ALL {
            let u = parity_op(mu, Spin::One);
            let s = pauli(mu);
            for m in 0..3 {
                let lhs: Matrix = (0..3).map(|n| &gamma[n] * &lambda * u[(m, n)]).fold(Matrix::zeros(2, 2), |a, b| a + b);
                let rhs = s.adjoint() * &gamma[m] * &lambda * &s;
                assert!((lhs - rhs).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn expect_matches_dense() {
        let layout = ChainLayout::uniform(3).unwrap();
        let s = Mps::random(layout, 4, 5).unwrap();
        let v = s.to_dense(CAP).unwrap();
        let ops = OperatorString::new()
            .with(0, pauli(Axis::Y))
            .with(2, spin1(Axis::X))
            .with(3, parity_op(Axis::Z, Spin::One))
            .with(4, pauli(Axis::Z))
            .with(2, spin1(Axis::Y));
        let a = expect_string(&s, &ops).unwrap();
        let b = dense_expect(&v, &layout, &ops);
        assert!((a - b).norm() < 1e-10);
        assert!((expect_string(&s, &OperatorString::new()).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn expect_rejects_bad_operator() {
        let s = aklt_mps(2).unwrap();
        let bad = OperatorString::new().with(0, spin1(Axis::Z));
        assert!(expect_string(&s, &bad).is_err());
        let out_of_range = OperatorString::new().with(9, pauli(Axis::Z));
        assert!(expect_string(&s, &out_of_range).is_err());
    }

    fn is_left_isometry(t: &DenseTensor) -> bool {
        let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let g = matmul(dr, dl * d, dr, t.data(), Op::H, t.data(), Op::N);
        (0..dr).all(|i| (0..dr).all(|j| (g[i * dr + j] - if i == j { 1.0 } else { 0.0 }).norm() < 1e-10))
    }

    fn is_right_isometry(t: &DenseTensor) -> bool {
        let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let g = matmul(dl, d * dr, dl, t.data(), Op::N, t.data(), Op::H);
        (0..dl).all(|i| (0..dl).all(|j| (g[i * dl + j] - if i == j { 1.0 } else { 0.0 }).norm() < 1e-10))
    }

    #[test]
    fn canonical_forms() {
        let s = aklt_mps(3).unwrap();
        for center in 0..s.n_sites() {
            let c = s.canonicalize(center).unwrap();
            assert!((inner(&s, &c).unwrap().norm() - 1.0).abs() < 1e-10);
            for site in 0..center {
                assert!(is_left_isometry(c.tensor(site)));
            }
            for site in center + 1..c.n_sites() {
                assert!(is_right_isometry(c.tensor(site)));
            }
            assert!((c.tensor(center).norm() - c.norm()).abs() < 1e-12);
            let twice = c.canonicalize(center).unwrap();
            for (a, b) in c.tensors().iter().zip(twice.tensors()) {
                assert!(a.max_abs_diff(b) < 1e-12);
            }
        }
    }

    #[test]
    fn dense_round_trip() {
        let layout = ChainLayout::uniform(3).unwrap();
        let s = Mps::random(layout, 6, 2).unwrap();
        let v = s.to_dense(CAP).unwrap();
        let back = Mps::from_dense(layout, &v, Truncation::default()).unwrap().to_dense(CAP).unwrap();
        let err = v.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((n - s.norm()).abs() < 1e-12);
        assert!(matches!(s.to_dense(10), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn inner_requires_same_layout() {
        let a = aklt_mps(2).unwrap();
        let b = aklt_mps(3).unwrap();
        assert!(inner(&a, &b).is_err());
        let c = Mps::random(*a.layout(), 3, 1).unwrap();
        assert!(inner(&a, &c).unwrap().norm() <= a.norm() * c.norm() + 1e-12);
    }
}
