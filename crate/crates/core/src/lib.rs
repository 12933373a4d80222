//! Dual eigenbases of PT-symmetric non-Hermitian Hamiltonians.
//!
//! Pipeline: build a discrete `(H, P, w)` triple ([`model`]), eigendecompose
//! it into biorthonormal right/left bases ([`spectral`]), rephase and rescale
//! the pairs into a PT basis with signature `s_n` and charge operator `C`
//! ([`ptcore`]), then check every orthonormality and completeness identity as
//! a residual ([`verify`]). [`config`], [`report`] and [`commands`] back the
//! `ptdual` binary.

pub mod commands;
pub mod config;
pub mod linalg;
pub mod model;
pub mod ptcore;
pub mod report;
pub mod spectral;
pub mod verify;

pub use faer::c64;
pub use model::{GridSpec, ModelParams, OperatorTriple};
pub use ptcore::{COperator, PTBasis, Sign};
pub use spectral::{BiorthogonalSystem, SpectralTolerances};
pub use verify::{ResidualReport, Tolerances};
