use phasecov::Error;
use serde::Serialize;

/// Exit statuses.
pub const VALIDATION: u8 = 1;
pub const PARSE: u8 = 2;
pub const NUMERICAL: u8 = 3;

/// A failed run: exit status plus a one-line machine-readable reason.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{reason}: {detail}")]
pub struct Failure {
    pub status: u8,
    pub reason: String,
    pub detail: String,
}

impl Failure {
    pub fn new(status: u8, reason: &str, detail: impl Into<String>) -> Self {
        Failure {
            status,
            reason: reason.into(),
            detail: detail.into(),
        }
    }

    pub fn parse(reason: &str, detail: impl Into<String>) -> Self {
        Self::new(PARSE, reason, detail)
    }

    pub fn validation(reason: &str, detail: impl Into<String>) -> Self {
        Self::new(VALIDATION, reason, detail)
    }

    pub fn numerical(reason: &str, detail: impl Into<String>) -> Self {
        Self::new(NUMERICAL, reason, detail)
    }

    pub fn io(detail: impl Into<String>) -> Self {
        Self::validation("output", detail)
    }

    /// Single JSON line for stderr.
    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("failure serializes")
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (status, reason) = match &e {
            Error::Format(_) => (PARSE, "format"),
            Error::Normalization { .. } => (VALIDATION, "trace_sum"),
            Error::NegativeBlock { .. } => (VALIDATION, "negative_block"),
            Error::BlockSize { .. } => (VALIDATION, "block_size"),
            Error::NonHermitianBlock { .. } => (VALIDATION, "non_hermitian_block"),
            Error::UnknownSector { .. } => (VALIDATION, "unknown_sector"),
            Error::InvalidDensity(_) => (VALIDATION, "invalid_density"),
            Error::UnsupportedDimension(_) => (VALIDATION, "unsupported_dimension"),
            Error::SpaceTooLarge { .. } => (VALIDATION, "space_too_large"),
            Error::InvalidMass(_) => (VALIDATION, "invalid_mass"),
            Error::InvalidAxis { .. } => (VALIDATION, "invalid_axis"),
            Error::DimensionMismatch { .. } => (VALIDATION, "dimension_mismatch"),
            Error::InvalidElement(_) => (VALIDATION, "invalid_element"),
            Error::GuardBandTooLarge { .. } => (VALIDATION, "guard_band"),
            Error::TrivialRotationGroup => (VALIDATION, "trivial_rotation_group"),
            Error::InvalidRegion(_) => (VALIDATION, "invalid_region"),
            Error::RegionOutsideBounds => (VALIDATION, "region_outside_bounds"),
            Error::RegionNotRepresentable(_) => (VALIDATION, "region_not_representable"),
            Error::AngularStructure(_) => (NUMERICAL, "angular_structure"),
            Error::Quadrature(_) => (NUMERICAL, "quadrature"),
            Error::QuadratureBoxTooSmall { .. } => (NUMERICAL, "quadrature_box"),
            Error::Sampling(_) => (NUMERICAL, "sampling"),
        };
        Failure::new(status, reason, e.to_string())
    }
}

/// Aborts with status 3 unless every value is finite.
pub fn ensure_finite<'a>(
    what: &str,
    values: impl IntoIterator<Item = &'a f64>,
) -> Result<(), Failure> {
    match values.into_iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Failure::numerical(
            "non_finite",
            format!("{what} contains {v}"),
        )),
        None => Ok(()),
    }
}
