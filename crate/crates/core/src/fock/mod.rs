//! Truncated bosonic Fock space: sector bases and the operators of the Hamiltonian
//! decomposition.

mod basis;
mod density;
mod operators;

pub use basis::{FockBasis, DEFAULT_DIM_CAP};
pub use density::{expected_n_plus, one_particle_density_matrix};
pub use operators::{assemble, pair_operator, Couplings, MatrixFreeOperator, OperatorTag};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("basis dimension exceeds the cap of {cap} states")]
    DimensionOverflow { cap: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("{0} requires the scattering solution φ")]
    MissingPhi(OperatorTag),
    #[error("φ has {got} entries, the basis has {expected} momenta")]
    PhiMismatch { expected: usize, got: usize },
    #[error("{tag} maps a basis state outside the basis (target {state:?})")]
    BasisLeak { tag: OperatorTag, state: Vec<u8> },
}
