use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 1 or 3)")]
    UnsupportedDimension(usize),

    #[error("basis size {dim} exceeds the configured bound {max}")]
    SpaceTooLarge { dim: usize, max: usize },

    #[error("invalid mass {0} (must be positive and finite)")]
    InvalidMass(f64),

    #[error("invalid axis {axis} for a {d}-dimensional space")]
    InvalidAxis { axis: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("guard band {band} leaves no levels at n_cut {n_cut}")]
    GuardBandTooLarge { band: usize, n_cut: usize },

    #[error("operation requires d = 3 (rotation group is trivial for d = 1)")]
    TrivialRotationGroup,

    #[error("angular sector not found: {0}")]
    AngularStructure(String),

    #[error("trace sum sum_l (2l+1) tr T_l = {sum}, expected 1")]
    Normalization { sum: f64 },

    #[error("block for l = {ell} is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NegativeBlock { ell: usize, min_eigenvalue: f64 },

    #[error("block for l = {ell} has size {found}, expected radial dimension {expected}")]
    BlockSize {
        ell: usize,
        expected: usize,
        found: usize,
    },

    #[error("block for l = {ell} is not Hermitian (defect {defect})")]
    NonHermitianBlock { ell: usize, defect: f64 },

    #[error("l = {ell} does not exist below the cutoff")]
    UnknownSector { ell: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region is not contained in the quadrature bounding box")]
    RegionOutsideBounds,

    #[error("transformed region is not representable: {0}")]
    RegionNotRepresentable(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("quadrature box too small: tail estimate {tail} exceeds {tolerance}")]
    QuadratureBoxTooSmall { tail: f64, tolerance: f64 },

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("invalid document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
