//! Environment updates for `<bra| MPO |ket>` contractions.
//!
//! Environments have shape `(bra, mpo, ket)` on the bond they close. MPO
//! tensors have shape `(left, out, in, right)`.

use num_complex::Complex64 as C64;

use crate::linalg::{matmul, DenseTensor, Op};

pub(crate) fn edge() -> DenseTensor {
    DenseTensor::from_vec(&[1, 1, 1], vec![C64::new(1.0, 0.0)]).unwrap()
}

/// MPO tensor reordered as `(left, in, out, right)`, the layout used by
/// [`left_update`].
pub(crate) fn w_left_form(w: &DenseTensor) -> DenseTensor {
    w.permute(&[0, 2, 1, 3]).unwrap()
}

/// MPO tensor reordered as `(in, right, out, left)`, the layout used by
/// [`right_update`].
pub(crate) fn w_right_form(w: &DenseTensor) -> DenseTensor {
    w.permute(&[2, 3, 1, 0]).unwrap()
}

/// Extends a left environment over one site; `w` in [`w_left_form`].
pub(crate) fn left_update(env: &DenseTensor, bra: &DenseTensor, w: &DenseTensor, ket: &DenseTensor) -> DenseTensor {
    let (b, wl, k) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (t, k2) = (ket.shape()[1], ket.shape()[2]);
    let (s, b2) = (bra.shape()[1], bra.shape()[2]);
    let wr = w.shape()[3];
    let t1 = matmul(b * wl, k, t * k2, env.data(), Op::N, ket.data(), Op::N);
    let t1 = DenseTensor::from_vec(&[b, wl, t, k2], t1).unwrap().permute(&[0, 3, 1, 2]).unwrap();
    let t2 = matmul(b * k2, wl * t, s * wr, t1.data(), Op::N, w.data(), Op::N);
    let t2 = DenseTensor::from_vec(&[b, k2, s, wr], t2).unwrap().permute(&[0, 2, 1, 3]).unwrap();
    let out = matmul(b2, b * s, k2 * wr, bra.data(), Op::H, t2.data(), Op::N);
    DenseTensor::from_vec(&[b2, k2, wr], out).unwrap().permute(&[0, 2, 1]).unwrap()
}

/// Extends a right environment over one site; `w` in [`w_right_form`].
pub(crate) fn right_update(env: &DenseTensor, bra: &DenseTensor, w: &DenseTensor, ket: &DenseTensor) -> DenseTensor {
    let (b2, wr, k2) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (k, t) = (ket.shape()[0], ket.shape()[1]);
    let (b, s) = (bra.shape()[0], bra.shape()[1]);
    let wl = w.shape()[3];
    let r = env.permute(&[2, 0, 1]).unwrap();
    let t1 = matmul(k * t, k2, b2 * wr, ket.data(), Op::N, r.data(), Op::N);
    let t1 = DenseTensor::from_vec(&[k, t, b2, wr], t1).unwrap().permute(&[0, 2, 1, 3]).unwrap();
    let t2 = matmul(k * b2, t * wr, s * wl, t1.data(), Op::N, w.data(), Op::N);
    let t2 = DenseTensor::from_vec(&[k, b2, s, wl], t2).unwrap().permute(&[0, 3, 2, 1]).unwrap();
    let out = matmul(k * wl, s * b2, b, t2.data(), Op::N, bra.data(), Op::H);
    DenseTensor::from_vec(&[k, wl, b], out).unwrap().permute(&[2, 1, 0]).unwrap()
}
