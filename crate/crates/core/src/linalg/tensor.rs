use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex tensor stored in row-major order (last index fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                len,
                data.len()
            )));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for ax in (0..idx.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            debug_assert!(i < n);
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::Shape(format!("cannot reshape {:?} into {:?}", self.shape, shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Reorders axes so that output axis `k` is input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        if perm.len() != rank {
            return Err(Error::Shape(format!("permutation {:?} for rank {}", perm, rank)));
        }
        let mut seen = vec![false; rank];
        for &p in perm {
            if p >= rank || seen[p] {
                return Err(Error::Shape(format!("invalid permutation {:?}", perm)));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.shape);
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        if self.data.is_empty() {
            return Ok(Self { shape: out_shape, data: out });
        }
        // The innermost output axis is walked in a tight loop.
        let last = rank - 1;
        let (n_last, s_last) = (out_shape[last], step[last]);
        let mut idx = vec![0usize; rank];
        let mut base = 0usize;
        loop {
            let mut o = base;
            for _ in 0..n_last {
                out.push(self.data[o]);
                o += s_last;
            }
            let mut ax = last;
            loop {
                if ax == 0 {
                    return Ok(Self { shape: out_shape, data: out });
                }
                ax -= 1;
                idx[ax] += 1;
                base += step[ax];
                if idx[ax] < out_shape[ax] {
                    break;
                }
                base -= step[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, c: C64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise modulus of the difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!("expected a matrix, got shape {:?}", self.shape)));
        }
        Ok(DMatrix::from_row_slice(self.shape[0], self.shape[1], &self.data))
    }

    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let (r, c) = m.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)]);
            }
        }
        Self { shape: vec![r, c], data }
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// How a row-major operand enters a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Stored as `rows x cols`, used as is.
    N,
    /// Stored as `cols x rows`, used as its conjugate transpose.
    H,
}

/// `C = op(A) op(B)` with `op(A)` of size `m x k` and `op(B)` of size `k x n`.
pub fn matmul(m: usize, k: usize, n: usize, a: &[C64], op_a: Op, b: &[C64], op_b: Op) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); m * n];
    matmul_into(m, k, n, a, op_a, b, op_b, &mut c, false);
    c
}

/// Same as [`matmul`] but writes into `c`, optionally accumulating.
#[allow(clippy::too_many_arguments)]
pub fn matmul_into(
    m: usize,
    k: usize,
    n: usize,
    a: &[C64],
    op_a: Op,
    b: &[C64],
    op_b: Op,
    c: &mut [C64],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.fill(C64::new(0.0, 0.0));
        }
        return;
    }
    let conj_a: Vec<C64>;
    let (a, rsa, csa) = match op_a {
        Op::N => (a, k as isize, 1),
        Op::H => {
            conj_a = a.iter().map(|z| z.conj()).collect();
            (&conj_a[..], 1, m as isize)
        }
    };
    let conj_b: Vec<C64>;
    let (b, rsb, csb) = match op_b {
        Op::N => (b, n as isize, 1),
        Op::H => {
            conj_b = b.iter().map(|z| z.conj()).collect();
            (&conj_b[..], 1, k as isize)
        }
    };
    let beta = if accumulate { [1.0, 0.0] } else { [0.0, 0.0] };
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; the slices were
    // checked above to hold exactly the strided extents passed here.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            beta,
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Contracts `axes_a` of `a` with `axes_b` of `b`.
///
/// The result carries the free axes of `a` followed by the free axes of `b`,
/// each in their original order.
pub fn contract(a: &DenseTensor, axes_a: &[usize], b: &DenseTensor, axes_b: &[usize]) -> Result<DenseTensor> {
    if axes_a.len() != axes_b.len() {
        return Err(Error::Shape(format!("contracting {} axes with {}", axes_a.len(), axes_b.len())));
    }
    for &ax in axes_a {
        if ax >= a.rank() {
            return Err(Error::AxisOutOfRange { axis: ax, rank: a.rank() });
        }
    }
    for &ax in axes_b {
        if ax >= b.rank() {
            return Err(Error::AxisOutOfRange { axis: ax, rank: b.rank() });
        }
    }
    for (&x, &y) in axes_a.iter().zip(axes_b) {
        if a.shape[x] != b.shape[y] {
            return Err(Error::Shape(format!(
                "axis {} of {:?} does not match axis {} of {:?}",
                x, a.shape, y, b.shape
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|x| !axes_a.contains(x)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|x| !axes_b.contains(x)).collect();
    if free_a.len() + axes_a.len() != a.rank() || free_b.len() + axes_b.len() != b.rank() {
        return Err(Error::Shape("repeated contraction axis".into()));
    }
    let perm_a: Vec<usize> = free_a.iter().chain(axes_a).copied().collect();
    let perm_b: Vec<usize> = axes_b.iter().chain(&free_b).copied().collect();
    let pa = a.permute(&perm_a)?;
    let pb = b.permute(&perm_b)?;
    let m: usize = free_a.iter().map(|&x| a.shape[x]).product();
    let k: usize = axes_a.iter().map(|&x| a.shape[x]).product();
    let n: usize = free_b.iter().map(|&x| b.shape[x]).product();
    let data = matmul(m, k, n, &pa.data, Op::N, &pb.data, Op::N);
    let shape: Vec<usize> =
        free_a.iter().map(|&x| a.shape[x]).chain(free_b.iter().map(|&x| b.shape[x])).collect();
    DenseTensor::from_vec(&shape, data)
}
