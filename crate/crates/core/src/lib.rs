//! Numerical toolkit for real polynomial singularities: Morse data of
//! morsifications, Milnor fiber sampling and component counts, real
//! Gauss-Manin period integrals with candidate annihilating operators, and a
//! toy public-key scheme built on morsifications together with a
//! chosen-ciphertext game harness.

pub mod cli;
pub mod cluster;
pub mod crypto;
pub mod error;
pub mod fiber;
pub mod gaussmanin;
pub mod germ;
pub mod linalg;
pub mod morse;

pub use error::{Error, Result};
