//! Measurement-based single-qubit gates on spin-one chain resource states.

pub mod dmrg;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod protocol;
pub mod spin_ops;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/chains.md")]
    pub struct Chains;
    #[doc = include_str!("../../../book/src/resource-states.md")]
    pub struct ResourceStates;
    #[doc = include_str!("../../../book/src/protocols.md")]
    pub struct Protocols;
    #[doc = include_str!("../../../book/src/fidelity.md")]
    pub struct Fidelity;
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub struct Oracle;
}
