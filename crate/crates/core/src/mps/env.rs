//! Transfer-matrix steps for expectation values of site-local operator products.

use num_complex::Complex64 as C64;

use crate::linalg::{matmul, DenseTensor, Op};
use crate::spin_ops::Matrix;

/// `out[a, s, b] = Σ_t op[s, t] t[a, t, b]` on a rank-3 tensor.
pub(crate) fn apply_physical(t: &DenseTensor, op: &Matrix) -> DenseTensor {
    let s = t.shape();
    let (dl, d, dr) = (s[0], s[1], s[2]);
    debug_assert_eq!(op.nrows(), d);
    let src = t.data();
    let mut out = DenseTensor::zeros(s);
    let dst = out.data_mut();
    for a in 0..dl {
        for i in 0..d {
            let row = &mut dst[(a * d + i) * dr..(a * d + i + 1) * dr];
            for j in 0..d {
                let c = op[(i, j)];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let col = &src[(a * d + j) * dr..(a * d + j + 1) * dr];
                for (r, x) in row.iter_mut().zip(col) {
                    *r += c * x;
                }
            }
        }
    }
    out
}

/// Left boundary environment: shape `(1, 1)` holding one.
pub(crate) fn left_edge() -> DenseTensor {
    DenseTensor::from_vec(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap()
}

/// Advances a left environment `(bra, ket)` over one site.
pub(crate) fn left_step(env: &DenseTensor, bra: &DenseTensor, ket: &DenseTensor, op: Option<&Matrix>) -> DenseTensor {
    let (xb, xk) = (env.shape()[0], env.shape()[1]);
    let (d, rk) = (ket.shape()[1], ket.shape()[2]);
    let rb = bra.shape()[2];
    debug_assert_eq!(ket.shape()[0], xk);
    debug_assert_eq!(bra.shape()[0], xb);
    let t = matmul(xb, xk, d * rk, env.data(), Op::N, ket.data(), Op::N);
    let mut t = DenseTensor::from_vec(&[xb, d, rk], t).unwrap();
    if let Some(op) = op {
        t = apply_physical(&t, op);
    }
    let out = matmul(rb, xb * d, rk, bra.data(), Op::H, t.data(), Op::N);
    DenseTensor::from_vec(&[rb, rk], out).unwrap()
}

/// Advances a right environment `(ket, bra)` over one site.
pub(crate) fn right_step(env: &DenseTensor, bra: &DenseTensor, ket: &DenseTensor, op: Option<&Matrix>) -> DenseTensor {
    let (yk, yb) = (env.shape()[0], env.shape()[1]);
    let (lk, d) = (ket.shape()[0], ket.shape()[1]);
    let lb = bra.shape()[0];
    debug_assert_eq!(ket.shape()[2], yk);
    debug_assert_eq!(bra.shape()[2], yb);
    let t = matmul(lk * d, yk, yb, ket.data(), Op::N, env.data(), Op::N);
    let mut t = DenseTensor::from_vec(&[lk, d, yb], t).unwrap();
    if let Some(op) = op {
        t = apply_physical(&t, op);
    }
    let out = matmul(lk, d * yb, lb, t.data(), Op::N, bra.data(), Op::H);
    DenseTensor::from_vec(&[lk, lb], out).unwrap()
}

/// Joins a left environment `(bra, ket)` with a right environment `(ket, bra)`.
pub(crate) fn close(left: &DenseTensor, right: &DenseTensor) -> C64 {
    let (b, k) = (left.shape()[0], left.shape()[1]);
    debug_assert_eq!(right.shape(), &[k, b]);
    let (l, r) = (left.data(), right.data());
    let mut s = C64::new(0.0, 0.0);
    for i in 0..b {
        for j in 0..k {
            s += l[i * k + j] * r[j * b + i];
        }
    }
    s
}
