//! CPU hair shading library built around three pieces:
//!
//! * a single-fiber phase function with R/TT/TRT lobes, Henyey-Greenstein
//!   longitudinal terms and a baked azimuthal look-up table ([`fiber`]),
//! * per-vertex transmittance baked from strand geometry into low-order
//!   spherical harmonics ([`transmittance`]),
//! * environment lighting folded in through an SH triple product against a
//!   precomputed phase-function SH table ([`farfield`]).
//!
//! [`render`] assembles these into a strand ray caster with exact depth-sorted
//! transparency, next to a Kajiya-Kay baseline. [`reference`] provides the
//! ground-truth oracles: a single-scattering path tracer and a direct sphere
//! quadrature shader. [`sh`] holds the spherical-harmonics algebra (basis,
//! projection, rotation, Wigner 3-j / Gaunt machinery) everything else builds
//! on.

pub mod accel;
pub mod color;
pub mod container;
pub mod farfield;
pub mod fiber;
pub mod geom;
pub mod image;
pub mod reference;
pub mod render;
pub mod transmittance;
pub mod scene;
pub mod sh;
pub mod strand;

pub use color::Rgb;
pub use geom::{Direction, Rotation, Vec3};
pub use sh::SHVector;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("failed to converge: {0}")]
    Convergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
