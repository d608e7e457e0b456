//! Dense complex linear algebra with tensor-factor bookkeeping.

mod hs;
mod layout;
mod matrix;
mod perm;

pub(crate) use hs::hs_decompose_unchecked;
pub use hs::{hs_basis, hs_compose, hs_decompose, HsBasis, HsDecomposition, TermIndex};
pub use layout::{FrameDims, PartyLayout};
pub use matrix::{kron, kron_all, min_eigenvalue, CMatrix, HERMITIAN_TOL};
pub(crate) use perm::lab_index_map;
pub use perm::{conjugate, permutation_unitary, Permutation};

pub use num_complex::Complex64 as C64;
