//! Process matrices without a fixed causal order, and the permutation
//! symmetry machinery around them: twirls, reference-frame encodings,
//! invariant instruments and charge-sector feasibility.

pub mod error;
pub mod frame;
pub mod io;
pub mod linalg;
pub mod process;
pub mod symmetry;

pub use error::{Error, Result};
