//! Spin-1 and spin-1/2 operator algebra.
//!
//! Spin-1 states are ordered `(|+>, |0>, |->)` (eigenvalues of `S^z` equal to
//! `+1, 0, -1`), qubit states `(|0>, |1>)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }
}

pub fn identity(dim: usize) -> Matrix {
    Matrix::identity(dim, dim)
}

fn real(rows: usize, cols: usize, entries: &[f64]) -> Matrix {
    Matrix::from_row_iterator(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)))
}

/// `S^+` for spin one.
pub fn spin1_plus() -> Matrix {
    let r = 2f64.sqrt();
    real(3, 3, &[0.0, r, 0.0, 0.0, 0.0, r, 0.0, 0.0, 0.0])
}

/// `S^-` for spin one.
pub fn spin1_minus() -> Matrix {
    spin1_plus().adjoint()
}

/// Spin-1 matrices `(S^x, S^y, S^z)`.
pub fn spin1_matrices() -> [Matrix; 3] {
    [spin1(Axis::X), spin1(Axis::Y), spin1(Axis::Z)]
}

pub fn spin1(axis: Axis) -> Matrix {
    let (p, m) = (spin1_plus(), spin1_minus());
    match axis {
        Axis::X => (&p + &m) * C64::new(0.5, 0.0),
        Axis::Y => (&p - &m) * C64::new(0.0, -0.5),
        Axis::Z => real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
    }
}

pub fn pauli(axis: Axis) -> Matrix {
    match axis {
        Axis::X => Matrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => Matrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => Matrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// Spin-1/2 operator `σ/2`.
pub fn spin_half(axis: Axis) -> Matrix {
    pauli(axis) * C64::new(0.5, 0.0)
}

/// Spin operator for either spin.
pub fn spin_op(axis: Axis, spin: Spin) -> Matrix {
    match spin {
        Spin::Half => spin_half(axis),
        Spin::One => spin1(axis),
    }
}

/// π-rotation: `exp(-iπ S^a)` for spin one, the Pauli matrix for spin one-half.
pub fn parity_op(axis: Axis, spin: Spin) -> Matrix {
    match spin {
        Spin::Half => pauli(axis),
        Spin::One => {
            let s = spin1(axis);
            identity(3) - &s * &s * C64::new(2.0, 0.0)
        }
    }
}

/// `exp(-i angle S^a)` for spin one.
pub fn spin1_rotation(axis: Axis, angle: f64) -> Matrix {
    let s = spin1(axis);
    let s2 = &s * &s;
    identity(3) + s * C64::new(0.0, -angle.sin()) + s2 * C64::new(angle.cos() - 1.0, 0.0)
}

/// Qubit rotation `R_a(angle) = exp(-i angle σ^a / 2)`.
pub fn rotation_gate(axis: Axis, angle: f64) -> Matrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    identity(2) * C64::new(c, 0.0) + pauli(axis) * C64::new(0.0, -s)
}

/// `R_x(theta) R_y(phi) R_z(lambda)`.
pub fn euler_unitary(theta: f64, phi: f64, lambda: f64) -> Matrix {
    rotation_gate(Axis::X, theta) * rotation_gate(Axis::Y, phi) * rotation_gate(Axis::Z, lambda)
}

/// Rotated spin component `U S^b U†` with `U = exp(-i angle S^a / 2)`.
pub fn rotated_spin1(component: Axis, rotation_axis: Axis, angle: f64) -> Matrix {
    let u = spin1_rotation(rotation_axis, angle / 2.0);
    &u * spin1(component) * u.adjoint()
}

/// `exp(-iπ U S^b U†)` with `U = exp(-i angle S^a / 2)`.
pub fn rotated_parity(component: Axis, rotation_axis: Axis, angle: f64) -> Matrix {
    let u = spin1_rotation(rotation_axis, angle / 2.0);
    &u * parity_op(component, Spin::One) * u.adjoint()
}

/// Unrotated measurement vector `|a>` for spin one.
pub fn basis_vector(axis: Axis) -> Vector {
    let r = FRAC_1_SQRT_2;
    let v = match axis {
        Axis::X => [-r, 0.0, r],
        Axis::Y => [r, 0.0, r],
        Axis::Z => [0.0, 1.0, 0.0],
    };
    Vector::from_iterator(3, v.iter().map(|&x| C64::new(x, 0.0)))
}

/// Spin-1 measurement basis rotated by `exp(-i angle S^a / 2)`.
///
/// The outcome along the rotation axis is the one that leaves the logical
/// state untouched by the intended rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    pub rotation_axis: Axis,
    pub angle: f64,
    /// Indexed by [`Axis::index`].
    pub vectors: [Vector; 3],
    pub failure_axis: Axis,
}

impl MeasurementBasis {
    pub fn vector(&self, outcome: Axis) -> &Vector {
        &self.vectors[outcome.index()]
    }

    pub fn projector(&self, outcome: Axis) -> Matrix {
        let v = self.vector(outcome);
        v * v.adjoint()
    }

    pub fn success_axes(&self) -> [Axis; 2] {
        let mut out = [Axis::X; 2];
        let mut k = 0;
        for a in Axis::ALL {
            if a != self.failure_axis {
                out[k] = a;
                k += 1;
            }
        }
        out
    }
}

pub fn measurement_basis(rotation_axis: Axis, angle: f64) -> MeasurementBasis {
    let u = spin1_rotation(rotation_axis, angle / 2.0);
    let vectors = Axis::ALL.map(|a| &u * basis_vector(a));
    MeasurementBasis { rotation_axis, angle, vectors, failure_axis: rotation_axis }
}

/// Single-qubit Pauli class up to phase, stored as symplectic bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pauli {
    pub x: bool,
    pub z: bool,
}

impl Pauli {
    pub const I: Pauli = Pauli { x: false, z: false };
    pub const X: Pauli = Pauli { x: true, z: false };
    pub const Y: Pauli = Pauli { x: true, z: true };
    pub const Z: Pauli = Pauli { x: false, z: true };

    pub fn from_axis(a: Axis) -> Self {
        match a {
            Axis::X => Self::X,
            Axis::Y => Self::Y,
            Axis::Z => Self::Z,
        }
    }

    pub fn mul(self, other: Self) -> Self {
        Pauli { x: self.x ^ other.x, z: self.z ^ other.z }
    }

    pub fn anticommutes(self, other: Self) -> bool {
        (self.x & other.z) ^ (self.z & other.x)
    }

    /// Dense index `0..4` in the order I, X, Y, Z.
    pub fn index(self) -> usize {
        match (self.x, self.z) {
            (false, false) => 0,
            (true, false) => 1,
            (true, true) => 2,
            (false, true) => 3,
        }
    }

    pub fn from_index(i: usize) -> Self {
        [Self::I, Self::X, Self::Y, Self::Z][i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;
    use std::f64::consts::PI;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn comm(a: &Matrix, b: &Matrix) -> Matrix {
        a * b - b * a
    }

    #[test]
    fn spin_algebra() {
        let [sx, sy, sz] = spin1_matrices();
        assert!(close(&comm(&sx, &sy), &(&sz * I), 1e-14));
        assert!(close(&comm(&sy, &sz), &(&sx * I), 1e-14));
        assert!(close(&comm(&sz, &sx), &(&sy * I), 1e-14));
        let casimir = &sx * &sx + &sy * &sy + &sz * &sz;
        assert!(close(&casimir, &(identity(3) * C64::new(2.0, 0.0)), 1e-14));
        let plus = Vector::from_vec(vec![ONE, ZERO, ZERO]);
        assert!(((&sz * &plus) - &plus).norm() < 1e-15);
    }

    #[test]
    fn parity_matches_exponential() {
        for a in Axis::ALL {
            let direct = expm_hermitian(&spin1(a), PI).unwrap();
            let p = parity_op(a, Spin::One);
            assert!(close(&direct, &p, 1e-12));
            assert!(close(&(&p * &p), &identity(3), 1e-14));
            assert!(close(&(&p * p.adjoint()), &identity(3), 1e-14));
            let q = parity_op(a, Spin::Half);
            assert!(close(&(&q * &q), &identity(2), 1e-14));
        }
        assert!(close(&parity_op(Axis::Z, Spin::One), &real(3, 3, &[-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]), 1e-15));
        assert_eq!(parity_op(Axis::X, Spin::Half), pauli(Axis::X));
    }

    #[test]
    fn parity_eigenvalues_on_measurement_basis() {
        for mu in Axis::ALL {
            let p = parity_op(mu, Spin::One);
            for nu in Axis::ALL {
                let v = basis_vector(nu);
                let sign = if mu == nu { 1.0 } else { -1.0 };
                assert!((&p * &v - &v * C64::new(sign, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_gates() {
        assert!(close(&rotation_gate(Axis::Z, 0.0), &identity(2), 1e-15));
        assert!(close(&rotation_gate(Axis::Z, PI), &(pauli(Axis::Z) * -I), 1e-15));
        for a in Axis::ALL {
            let r = rotation_gate(a, 0.3) * rotation_gate(a, 1.1);
            assert!(close(&r, &rotation_gate(a, 1.4), 1e-12));
            assert!(close(&rotation_gate(a, 0.7), &expm_hermitian(&spin_half(a), 0.7).unwrap(), 1e-12));
            assert!(close(&spin1_rotation(a, 0.9), &expm_hermitian(&spin1(a), 0.9).unwrap(), 1e-12));
        }
        let u = euler_unitary(PI / 2.0, PI / 8.0, PI / 4.0);
        assert!(close(&(&u * u.adjoint()), &identity(2), 1e-14));
    }

    #[test]
    fn unrotated_basis() {
        let b = measurement_basis(Axis::Z, 0.0);
        let r = FRAC_1_SQRT_2;
        assert!((b.vector(Axis::X)[0] - C64::new(-r, 0.0)).norm() < 1e-15);
        assert!((b.vector(Axis::X)[2] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((b.vector(Axis::Y)[0] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((b.vector(Axis::Z)[1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn rotated_basis_about_z() {
        let t = 0.83;
        let b = measurement_basis(Axis::Z, t);
        let r = FRAC_1_SQRT_2;
        let x = b.vector(Axis::X);
        assert!((x[0] - C64::from_polar(-r, -t / 2.0)).norm() < 1e-14);
        assert!((x[2] - C64::from_polar(r, t / 2.0)).norm() < 1e-14);
        assert_eq!(b.failure_axis, Axis::Z);
        assert_eq!(b.success_axes(), [Axis::X, Axis::Y]);
        let b = measurement_basis(Axis::Y, t);
        assert!((b.vector(Axis::Y) - basis_vector(Axis::Y)).norm() < 1e-14);
        assert_eq!(b.success_axes(), [Axis::X, Axis::Z]);
    }

    #[test]
    fn basis_vectors_are_null_vectors_of_rotated_spin() {
        for a in Axis::ALL {
            for t in [0.0, 0.4, -2.1, PI] {
                let b = measurement_basis(a, t);
                for mu in Axis::ALL {
                    let s = rotated_spin1(mu, a, t);
                    assert!((&s * b.vector(mu)).norm() < 1e-12);
                    for nu in Axis::ALL {
                        let ov = b.vector(mu).dotc(b.vector(nu));
                        let expect = if mu == nu { 1.0 } else { 0.0 };
                        assert!((ov - C64::new(expect, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rotation_identities() {
        for t in [0.0, 0.3, 1.7, -2.5, PI] {
            let b = measurement_basis(Axis::Z, t);
            let lhs = spin1_rotation(Axis::Z, t);
            let rhs = (b.projector(Axis::X) + b.projector(Axis::Y)) * C64::new(t.cos(), 0.0)
                + b.projector(Axis::Z)
                + spin1(Axis::Z) * C64::new(0.0, -t.sin());
            assert!(close(&lhs, &rhs, 1e-12));
            let lhs = rotated_parity(Axis::X, Axis::Z, t);
            let rhs = spin1_rotation(Axis::Z, t) * parity_op(Axis::X, Spin::One);
            assert!(close(&lhs, &rhs, 1e-12));
            let lhs = expm_hermitian(&rotated_spin1(Axis::X, Axis::Z, t), PI).unwrap();
            assert!(close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn rotated_parity_eigenvalues() {
        for a in Axis::ALL {
            let b = measurement_basis(a, 1.3);
            for mu in Axis::ALL {
                let p = rotated_parity(mu, a, 1.3);
                for nu in Axis::ALL {
                    let sign = if mu == nu { 1.0 } else { -1.0 };
                    let v = b.vector(nu);
                    assert!((&p * v - v * C64::new(sign, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_classes() {
        assert!(Pauli::X.anticommutes(Pauli::Z));
        assert!(Pauli::Y.anticommutes(Pauli::X));
        assert!(!Pauli::Y.anticommutes(Pauli::Y));
        assert!(!Pauli::I.anticommutes(Pauli::Z));
        assert_eq!(Pauli::X.mul(Pauli::Z), Pauli::Y);
        for i in 0..4 {
            assert_eq!(Pauli::from_index(i).index(), i);
        }
        for a in Axis::ALL {
            for b in Axis::ALL {
                let anti = (pauli(a) * pauli(b) + pauli(b) * pauli(a)).norm() < 1e-14;
                assert_eq!(anti, Pauli::from_axis(a).anticommutes(Pauli::from_axis(b)));
            }
        }
    }
}
