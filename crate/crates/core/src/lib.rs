//! Fock-space analysis of the 1D log-kernel bound-state problem: candidate
//! eigenfunctions, quadrature, the circle operator, residue calculus and
//! Chebyshev identities, plus a consistency report.

pub mod circle;
pub mod error;
pub mod exec;
pub mod identities;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod report;
pub mod residue;

pub use error::{Error, Result};
pub use exec::Strategy;
pub use model::{CandidateEigenfunction, Parity, PhysicalParams, QuantumNumber};
pub use quad::QuadratureSpec;
