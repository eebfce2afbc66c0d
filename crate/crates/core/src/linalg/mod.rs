//! Dense tensors, decompositions and an iterative eigensolver.

mod decomp;
mod lanczos;
mod tensor;

pub use decomp::{expm_hermitian, hermitian_eigen, kron, svd_truncate, Svd, Truncation};
pub use lanczos::{lanczos_ground, lanczos_solve, LanczosConfig, LanczosResult};
pub use tensor::{contract, matmul, matmul_into, DenseTensor, Op};

pub(crate) use lanczos::{dot, norm};
