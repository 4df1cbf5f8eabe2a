//! Galilei-covariant phase-space measurements of a spinless particle on a
//! truncated oscillator basis.

pub mod error;
pub mod fockspace;
pub mod galilei;
pub mod io;
pub mod linalg;
pub mod povm;
pub mod rotinv;
pub mod verify;

pub use error::{Error, Result};
pub use fockspace::{
    build_space, validate_density, DensityMatrix, FockSpace, OperatorMatrix, ValidationReport,
};
pub use galilei::{
    act, compose, compose_ext, multiplier, CentralExtElement, GalileiElement, PhasePoint,
};
pub use num_complex::Complex64 as C64;
pub use povm::{PhaseBox, PhaseRegion, QuadratureRule};
pub use rotinv::InvariantBlocks;
pub use verify::VerificationReport;
