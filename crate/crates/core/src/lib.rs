// Negated float comparisons deliberately treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod bogoliubov;
pub mod cli;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod scattering;
pub mod spectra;
