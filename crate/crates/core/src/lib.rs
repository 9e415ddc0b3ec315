//! curved-qit: generalized quantum measurements, completely positive state
//! transformations, Neumark dilation, the accelerated-detector (Unruh)
//! example and finite expectation matching between representations, all on
//! truncated bosonic Fock spaces.

pub mod channel;
pub mod error;
pub mod fell;
pub mod hilbert;
pub mod io;
pub mod povm;
pub mod random;
pub mod unruh;

pub use error::{QitError, Result};
pub use hilbert::{DensityMatrix, FockSpace, Operator, DEFAULT_TOL};
