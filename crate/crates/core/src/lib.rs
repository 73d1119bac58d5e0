//! Finite-dimensional contextual extensions of matrix algebras.
//!
//! The crate builds context categories of commutative *-subalgebras, the
//! limit object over their Gel'fand spectra, spectral presheaves with
//! global-section search and daseinisation, a toy local net on a qubit chain,
//! a truncated bosonic Fock sector over a finite group, and realism-inequality
//! evaluation. Every structure comes with an exhaustive checker.

pub mod error;
pub mod extension;
pub mod fincat;
pub mod gft;
pub mod io;
pub mod linalg;
pub mod locnet;
pub mod presheaf;
pub mod realism;
pub mod report;
pub mod staralg;

pub use error::{Error, Result};
pub use report::{ValidationReport, Violation};
