//! Hamiltonians as sums of local terms and their MPO form.

pub(crate) mod env;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{matmul, svd_truncate, DenseTensor, Op, Truncation};
use crate::mps::{ChainLayout, Mps, Region};
use crate::spin_ops::{spin_half, spin1, Axis, Matrix};

use env::{edge, left_update, w_left_form};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Aklt,
    /// Bilinear-biquadratic chain `S·S + alpha (S·S)^2`.
    Blbq { alpha: f64 },
    /// Ising anisotropy `j` and single-ion anisotropy `d` along z.
    Xxz { j: f64, d: f64 },
    /// Three anisotropic blocks (z, y, x) joined by Heisenberg junctions.
    Blocked { j: f64, d: f64, junction: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: ModelKind,
    /// Spin-1 sites, excluding junction sites for blocked chains.
    pub length: usize,
}

impl HamiltonianSpec {
    pub fn aklt(length: usize) -> Self {
        Self { kind: ModelKind::Aklt, length }
    }

    pub fn blbq(length: usize, alpha: f64) -> Self {
        Self { kind: ModelKind::Blbq { alpha }, length }
    }

    pub fn xxz(length: usize, j: f64, d: f64) -> Self {
        Self { kind: ModelKind::Xxz { j, d }, length }
    }

    pub fn blocked(length: usize, j: f64, d: f64, junction: usize) -> Self {
        Self { kind: ModelKind::Blocked { j, d, junction }, length }
    }

    pub fn layout(&self) -> Result<ChainLayout> {
        let params: &[f64] = match &self.kind {
            ModelKind::Aklt => &[],
            ModelKind::Blbq { alpha } => &[*alpha][..],
            ModelKind::Xxz { j, d } | ModelKind::Blocked { j, d, .. } => &[*j, *d][..],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("non-finite coupling".into()));
        }
        match self.kind {
            ModelKind::Blocked { junction, .. } => ChainLayout::blocked(self.length, junction),
            _ => ChainLayout::uniform(self.length),
        }
    }

    pub fn terms(&self) -> Result<TermList> {
        let layout = self.layout()?;
        let mut t = TermList::new(layout);
        let out = layout.output_site();
        let n = layout.n_spin1();
        match self.kind {
            ModelKind::Aklt => blbq_terms(&mut t, n, 1.0 / 3.0),
            ModelKind::Blbq { alpha } => blbq_terms(&mut t, n, alpha),
            ModelKind::Xxz { j, d } => {
                let c = [1.0, 1.0, j];
                t.coupling(0, c);
                for i in 1..n {
                    t.coupling(i, c);
                }
                t.coupling(n, c);
                for i in 1..=n {
                    t.anisotropy(i, Axis::Z, d);
                }
            }
            ModelKind::Blocked { j, d, .. } => {
                t.coupling(0, [1.0, 1.0, j]);
                for seg in layout.segments() {
                    let (axis, c) = match seg.region {
                        Region::A => (Axis::Z, [1.0, 1.0, j]),
                        Region::B => (Axis::Y, [1.0, j, 1.0]),
                        Region::C => (Axis::X, [j, 1.0, 1.0]),
                        Region::LeftJunction | Region::RightJunction => {
                            // Junction couplings extend one bond past each end.
                            for i in seg.sites.start - 1..seg.sites.end {
                                t.coupling(i, [1.0; 3]);
                            }
                            continue;
                        }
                        Region::Bulk => unreachable!(),
                    };
                    for i in seg.sites.clone() {
                        t.anisotropy(i, axis, d);
                        if i + 1 < seg.sites.end {
                            t.coupling(i, c);
                        }
                    }
                }
                t.coupling(out - 1, [j, 1.0, 1.0]);
            }
        }
        Ok(t)
    }
}

fn blbq_terms(t: &mut TermList, n: usize, alpha: f64) {
    t.coupling(0, [1.0; 3]);
    for i in 1..n {
        t.coupling(i, [1.0; 3]);
        if alpha != 0.0 {
            for a in Axis::ALL {
                for b in Axis::ALL {
                    let op = spin1(a) * spin1(b);
                    t.bond(i, op.clone() * C64::new(alpha, 0.0), op);
                }
            }
        }
    }
    t.coupling(n, [1.0; 3]);
}

/// Sum of one-site terms and nearest-neighbour products.
#[derive(Clone, Debug)]
pub struct TermList {
    layout: ChainLayout,
    onsite: Vec<Option<Matrix>>,
    /// Per bond `(i, i + 1)`: pairs `(A_i, B_{i+1})`.
    bonds: Vec<Vec<(Matrix, Matrix)>>,
}

impl TermList {
    pub fn new(layout: ChainLayout) -> Self {
        let n = layout.n_sites();
        Self { layout, onsite: vec![None; n], bonds: vec![Vec::new(); n - 1] }
    }

    pub fn layout(&self) -> &ChainLayout {
        &self.layout
    }

    pub fn onsite(&mut self, site: usize, op: Matrix) {
        self.onsite[site] = Some(match self.onsite[site].take() {
            Some(prev) => prev + op,
            None => op,
        });
    }

    pub fn bond(&mut self, left: usize, a: Matrix, b: Matrix) {
        self.bonds[left].push((a, b));
    }

    fn spin(&self, site: usize, axis: Axis) -> Matrix {
        if self.layout.local_dim(site) == 2 {
            spin_half(axis)
        } else {
            spin1(axis)
        }
    }

    /// `Σ_a c_a S^a_i S^a_{i+1}` with spin one-half operators on the end qubits.
    pub fn coupling(&mut self, left: usize, c: [f64; 3]) {
        for a in Axis::ALL {
            let ca = c[a.index()];
            if ca != 0.0 {
                let x = self.spin(left, a) * C64::new(ca, 0.0);
                let y = self.spin(left + 1, a);
                self.bond(left, x, y);
            }
        }
    }

    /// `d (S^a_i)^2`.
    pub fn anisotropy(&mut self, site: usize, axis: Axis, d: f64) {
        if d != 0.0 {
            let s = spin1(axis);
            self.onsite(site, &s * &s * C64::new(d, 0.0));
        }
    }

    pub fn onsite_terms(&self) -> impl Iterator<Item = (usize, &Matrix)> {
        self.onsite.iter().enumerate().filter_map(|(i, m)| m.as_ref().map(|m| (i, m)))
    }

    pub fn bond_terms(&self) -> impl Iterator<Item = (usize, &Matrix, &Matrix)> {
        self.bonds.iter().enumerate().flat_map(|(i, v)| v.iter().map(move |(a, b)| (i, a, b)))
    }
}

/// Matrix product operator with tensors shaped `(left, out, in, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    layout: ChainLayout,
    tensors: Vec<DenseTensor>,
}

impl Mpo {
    pub fn new(layout: ChainLayout, tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.len() != layout.n_sites() {
            return Err(Error::Shape(format!("{} MPO tensors for {} sites", tensors.len(), layout.n_sites())));
        }
        let mut left = 1;
        for (site, t) in tensors.iter().enumerate() {
            let s = t.shape();
            let d = layout.local_dim(site);
            if s.len() != 4 || s[0] != left || s[1] != d || s[2] != d {
                return Err(Error::Shape(format!("MPO site {site} tensor has shape {s:?}")));
            }
            left = s[3];
        }
        if left != 1 {
            return Err(Error::Shape("MPO right boundary bond must be 1".into()));
        }
        Ok(Self { layout, tensors })
    }

    /// Finite-state MPO of a term list: bond state 0 means "nothing placed",
    /// the last state "term complete", the rest "bond term k half placed".
    pub fn from_terms(terms: &TermList) -> Result<Self> {
        let layout = terms.layout;
        let n = layout.n_sites();
        let links: Vec<usize> = (0..=n)
            .map(|i| if i == 0 || i == n { 1 } else { 2 + terms.bonds[i - 1].len() })
            .collect();
        let mut tensors = Vec::with_capacity(n);
        for site in 0..n {
            let d = layout.local_dim(site);
            let (wl, wr) = (links[site], links[site + 1]);
            let mut w = DenseTensor::zeros(&[wl, d, d, wr]);
            // Row and column positions of the "nothing" and "done" states.
            let start_l = 0;
            let done_l = wl - 1;
            let start_r = if site + 1 == n { usize::MAX } else { 0 };
            let done_r = wr - 1;
            let put = |w: &mut DenseTensor, r: usize, c: usize, m: &Matrix| {
                for i in 0..d {
                    for j in 0..d {
                        let v = w.get(&[r, i, j, c]) + m[(i, j)];
                        w.set(&[r, i, j, c], v);
                    }
                }
            };
            let id = Matrix::identity(d, d);
            if start_r != usize::MAX {
                put(&mut w, start_l, start_r, &id);
            }
            if site > 0 {
                put(&mut w, done_l, done_r, &id);
            }
            if let Some(m) = &terms.onsite[site] {
                put(&mut w, start_l, done_r, m);
            }
            if site + 1 < n {
                for (k, (a, _)) in terms.bonds[site].iter().enumerate() {
                    put(&mut w, start_l, 1 + k, a);
                }
            }
            if site > 0 {
                for (k, (_, b)) in terms.bonds[site - 1].iter().enumerate() {
                    put(&mut w, 1 + k, done_r, b);
                }
            }
            tensors.push(w);
        }
        Self::new(layout, tensors)
    }

    pub fn layout(&self) -> &ChainLayout {
        &self.layout
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    /// MPO of the operator product `self · other`.
    pub fn compose(&self, other: &Mpo) -> Result<Mpo> {
        if self.layout.local_dims() != other.layout.local_dims() {
            return Err(Error::Shape("MPOs live on different layouts".into()));
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| {
                let (al, d, _, ar) = (a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]);
                let (bl, br) = (b.shape()[0], b.shape()[3]);
                DenseTensor::from_fn(&[al * bl, d, d, ar * br], |ix| {
                    let (x, y) = (ix[0] / bl, ix[0] % bl);
                    let (u, v) = (ix[3] / br, ix[3] % br);
                    (0..d).map(|k| a.get(&[x, ix[1], k, u]) * b.get(&[y, k, ix[2], v])).sum()
                })
            })
            .collect();
        Mpo::new(self.layout, tensors)
    }

    /// Dense operator in lexicographic site order.
    pub fn to_dense(&self, cap: usize) -> Result<Matrix> {
        let dim = self.layout.total_dim().unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        // acc[(out, in), w] built site by site.
        let mut acc = DenseTensor::from_vec(&[1, 1, 1], vec![C64::new(1.0, 0.0)])?;
        for w in &self.tensors {
            let (o, i, wl) = (acc.shape()[0], acc.shape()[1], acc.shape()[2]);
            let (d, wr) = (w.shape()[1], w.shape()[3]);
            let m = matmul(o * i, wl, d * d * wr, acc.data(), Op::N, w.data(), Op::N);
            acc = DenseTensor::from_vec(&[o, i, d, d, wr], m)?
                .permute(&[0, 2, 1, 3, 4])?
                .reshape(&[o * d, i * d, wr])?;
        }
        let (o, i) = (acc.shape()[0], acc.shape()[1]);
        Ok(Matrix::from_row_slice(o, i, acc.data()))
    }
}

pub fn build_mpo(spec: &HamiltonianSpec) -> Result<Mpo> {
    Mpo::from_terms(&spec.terms()?)
}

fn check_layouts(h: &Mpo, s: &Mps) -> Result<()> {
    if h.layout.local_dims() != s.layout().local_dims() {
        return Err(Error::Shape("MPO and state live on different layouts".into()));
    }
    Ok(())
}

/// `<s|H|s>` as a complex number.
pub fn expect_mpo_complex(h: &Mpo, s: &Mps) -> Result<C64> {
    check_layouts(h, s)?;
    let mut e = edge();
    for (w, t) in h.tensors.iter().zip(s.tensors()) {
        e = left_update(&e, t, &w_left_form(w), t);
    }
    Ok(e.data()[0])
}

/// `<s|H|s>` for a Hermitian `H`.
pub fn expect_mpo(h: &Mpo, s: &Mps) -> Result<f64> {
    let v = expect_mpo_complex(h, s)?;
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::NotReal { imag: v.im });
    }
    Ok(v.re)
}

/// `<H^2> - <H>^2` for a normalized state.
pub fn variance(h: &Mpo, s: &Mps) -> Result<f64> {
    let e = expect_mpo(h, s)?;
    let h2 = expect_mpo(&h.compose(h)?, s)?;
    Ok(h2 - e * e)
}

/// `H|s>` compressed by truncated SVDs; returns the state and the summed
/// discarded weight.
pub fn apply_mpo(h: &Mpo, s: &Mps, trunc: Truncation) -> Result<(Mps, f64)> {
    check_layouts(h, s)?;
    let tensors: Vec<DenseTensor> = h
        .tensors
        .iter()
        .zip(s.tensors())
        .map(|(w, a)| {
            let (wl, d, _, wr) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
            let (al, ar) = (a.shape()[0], a.shape()[2]);
            DenseTensor::from_fn(&[wl * al, d, wr * ar], |ix| {
                let (x, y) = (ix[0] / al, ix[0] % al);
                let (u, v) = (ix[2] / ar, ix[2] % ar);
                (0..d).map(|k| w.get(&[x, ix[1], k, u]) * a.get(&[y, k, v])).sum()
            })
        })
        .collect();
    let mut out = Mps::new(*s.layout(), tensors)?;
    let last = out.n_sites() - 1;
    out.canonicalize_mut(last)?;
    let mut discarded = 0.0;
    for site in (1..=last).rev() {
        let t = out.tensor(site);
        let (dl, d, dr) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let m = t.clone().reshape(&[dl, d * dr])?;
        let svd = svd_truncate(&m, trunc)?;
        discarded += svd.discarded;
        let k = svd.s.len();
        out.set_tensor(site, svd.vt.reshape(&[k, d, dr])?);
        let mut us = svd.u;
        for row in us.data_mut().chunks_mut(k) {
            for (x, s) in row.iter_mut().zip(&svd.s) {
                *x *= s;
            }
        }
        let prev = out.tensor(site - 1);
        let (pl, pd) = (prev.shape()[0], prev.shape()[1]);
        let data = matmul(pl * pd, dl, k, prev.data(), Op::N, us.data(), Op::N);
        out.set_tensor(site - 1, DenseTensor::from_vec(&[pl, pd, k], data)?);
    }
    out.set_center(Some(0));
    Ok((out, discarded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, kron};
    use crate::mps::{aklt_mps, aklt_mps_on, DEFAULT_DENSE_CAP};
    use crate::spin_ops::{identity, parity_op, pauli, Spin};

    const CAP: usize = 4 * 81;

    /// `I ⊗ op ⊗ I` with `op` covering consecutive sites starting at `site`.
    fn embed(dims: &[usize], site: usize, op: &Matrix) -> Matrix {
        let mut span = 1;
        let mut end = site;
        while span < op.nrows() {
            span *= dims[end];
            end += 1;
        }
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[end.max(site + 1)..].iter().product();
        kron(&kron(&identity(left), op), &identity(right))
    }

    fn local_spin(d: usize, a: Axis) -> Matrix {
        if d == 2 {
            spin_half(a)
        } else {
            spin1(a)
        }
    }

    fn bond(dims: &[usize], i: usize, c: [f64; 3]) -> Matrix {
        let (d1, d2) = (dims[i], dims[i + 1]);
        Axis::ALL.iter().fold(Matrix::zeros(d1 * d2, d1 * d2), |acc, &a| {
            acc + kron(&local_spin(d1, a), &local_spin(d2, a)) * C64::new(c[a.index()], 0.0)
        })
    }

    /// Hamiltonians written out with Kronecker products.
    fn dense_by_hand(spec: &HamiltonianSpec) -> Matrix {
        let layout = spec.layout().unwrap();
        let dims = layout.local_dims();
        let n = layout.n_spin1();
        let dim = dims.iter().product();
        let mut h = Matrix::zeros(dim, dim);
        let dot = |i: usize, c: [f64; 3]| embed(&dims, i, &bond(&dims, i, c));
        let sq = |site: usize, a: Axis, d: f64| {
            let s = spin1(a);
            embed(&dims, site, &(&s * &s * C64::new(d, 0.0)))
        };
        match spec.kind {
            ModelKind::Aklt | ModelKind::Blbq { .. } => {
                let alpha = if let ModelKind::Blbq { alpha } = spec.kind { alpha } else { 1.0 / 3.0 };
                h += dot(0, [1.0; 3]) + dot(n, [1.0; 3]);
                for i in 1..n {
                    let b = bond(&dims, i, [1.0; 3]);
                    h += embed(&dims, i, &(&b + &b * &b * C64::new(alpha, 0.0)));
                }
            }
            ModelKind::Xxz { j, d } => {
                for i in 0..=n {
                    h += dot(i, [1.0, 1.0, j]);
                }
                for i in 1..=n {
                    h += sq(i, Axis::Z, d);
                }
            }
            ModelKind::Blocked { j, d, junction } => {
                let b = spec.length / 3;
                let nj = junction;
                h += dot(0, [1.0, 1.0, j]);
                for i in 1..b {
                    h += dot(i, [1.0, 1.0, j]);
                }
                for i in 1..=b {
                    h += sq(i, Axis::Z, d);
                }
                for i in b..=b + nj {
                    h += dot(i, [1.0; 3]);
                }
                for i in b + nj + 1..2 * b + nj {
                    h += dot(i, [1.0, j, 1.0]);
                }
                for i in b + nj + 1..=2 * b + nj {
                    h += sq(i, Axis::Y, d);
                }
                for i in 2 * b + nj..=2 * b + 2 * nj {
                    h += dot(i, [1.0; 3]);
                }
                for i in 2 * b + 2 * nj + 1..spec.length + 2 * nj {
                    h += dot(i, [j, 1.0, 1.0]);
                }
                for i in 2 * b + 2 * nj + 1..=spec.length + 2 * nj {
                    h += sq(i, Axis::X, d);
                }
                h += dot(n, [j, 1.0, 1.0]);
            }
        }
        h
    }

    fn specs() -> Vec<HamiltonianSpec> {
        let mut v = Vec::new();
        for l in 1..=3 {
            v.push(HamiltonianSpec::aklt(l));
            v.push(HamiltonianSpec::blbq(l, -0.5));
            v.push(HamiltonianSpec::xxz(l, 2.0, -1.0));
        }
        v.push(HamiltonianSpec::xxz(4, 0.7, 1.3));
        v.push(HamiltonianSpec::blocked(3, 1.7, -0.6, 0));
        v.push(HamiltonianSpec::blocked(3, 2.0, 0.8, 1));
        v
    }

    #[test]
    fn mpo_matches_kronecker_construction() {
        for spec in specs() {
            let h = build_mpo(&spec).unwrap().to_dense(DEFAULT_DENSE_CAP).unwrap();
            let want = dense_by_hand(&spec);
            assert!((&h - &want).norm() < 1e-12, "{spec:?}");
            assert!((&h - h.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn named_models_coincide() {
        for l in 1..=3 {
            let a = build_mpo(&HamiltonianSpec::aklt(l)).unwrap();
            let b = build_mpo(&HamiltonianSpec::blbq(l, 1.0 / 3.0)).unwrap();
            assert_eq!(a, b);
            let x = build_mpo(&HamiltonianSpec::xxz(l, 1.0, 0.0)).unwrap().to_dense(CAP).unwrap();
            let y = build_mpo(&HamiltonianSpec::blbq(l, 0.0)).unwrap().to_dense(CAP).unwrap();
            assert!((x - y).norm() < 1e-12);
        }
        let blocked = build_mpo(&HamiltonianSpec::blocked(3, 1.0, 0.0, 1)).unwrap().to_dense(DEFAULT_DENSE_CAP).unwrap();
        let uniform = build_mpo(&HamiltonianSpec::xxz(5, 1.0, 0.0)).unwrap().to_dense(DEFAULT_DENSE_CAP).unwrap();
        assert!((blocked - uniform).norm() < 1e-12);
    }

    #[test]
    fn global_symmetries() {
        for (spec, axes) in [
            (HamiltonianSpec::aklt(3), &Axis::ALL[..]),
            (HamiltonianSpec::blbq(2, 0.4), &Axis::ALL[..]),
            (HamiltonianSpec::xxz(3, 1.6, -0.7), &[Axis::Z][..]),
        ] {
            let layout = spec.layout().unwrap();
            let h = build_mpo(&spec).unwrap().to_dense(DEFAULT_DENSE_CAP).unwrap();
            for &mu in axes {
                let u = layout
                    .local_dims()
                    .iter()
                    .map(|&d| if d == 2 { pauli(mu) } else { parity_op(mu, Spin::One) })
                    .reduce(|a, b| kron(&a, &b))
                    .unwrap();
                assert!((&h * &u - &u * &h).norm() < 1e-10, "{spec:?} {mu}");
            }
        }
    }

    #[test]
    fn blocked_rejects_bad_length() {
        assert!(build_mpo(&HamiltonianSpec::blocked(4, 1.0, 0.0, 1)).is_err());
        assert!(build_mpo(&HamiltonianSpec::xxz(0, 1.0, 0.0)).is_err());
        assert!(build_mpo(&HamiltonianSpec::xxz(2, f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn aklt_energy_is_ground_energy() {
        for l in 1..=4 {
            let spec = HamiltonianSpec::aklt(l);
            let mpo = build_mpo(&spec).unwrap();
            let (vals, _) = hermitian_eigen(&mpo.to_dense(DEFAULT_DENSE_CAP).unwrap()).unwrap();
            let s = aklt_mps(l).unwrap();
            let e = expect_mpo(&mpo, &s).unwrap();
            assert!((e - vals[0]).abs() < 1e-10, "L={l}: {e} vs {}", vals[0]);
            assert!(variance(&mpo, &s).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn variational_bound_and_apply() {
        let spec = HamiltonianSpec::xxz(3, 1.0, 0.0);
        let mpo = build_mpo(&spec).unwrap();
        let h = mpo.to_dense(CAP).unwrap();
        let (vals, _) = hermitian_eigen(&h).unwrap();
        let layout = spec.layout().unwrap();
        for seed in 0..4 {
            let s = Mps::random(layout, 3, seed).unwrap();
            let e = expect_mpo(&mpo, &s).unwrap();
            assert!(e >= vals[0] - 1e-12);
            assert!(variance(&mpo, &s).unwrap() > -1e-10);
            let (hs, disc) = apply_mpo(&mpo, &s, Truncation::default()).unwrap();
            assert!(disc < 1e-20);
            let v = nalgebra::DVector::from_vec(s.to_dense(CAP).unwrap());
            let want = &h * &v;
            let got = hs.to_dense(CAP).unwrap();
            let err = want.iter().zip(&got).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
        let s = aklt_mps_on(layout).unwrap();
        let (_, disc) = apply_mpo(&mpo, &s, Truncation { max_rank: 1, cutoff: 0.0 }).unwrap();
        assert!(disc > 0.0);
    }
}
