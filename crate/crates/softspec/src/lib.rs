//! Spectra of randomly perforated high-contrast media.
//!
//! A two-phase medium on a planar domain: a stiff matrix containing randomly
//! placed soft inclusions whose stiffness scales with the square of the
//! microstructure period. The crate samples such media on the integer
//! lattice, discretises the associated operator with bilinear finite
//! elements, computes certified eigenvalue windows, and compares them with
//! the homogenised limit: interval bands from scaled inclusion spectra plus
//! point eigenvalues located by the spectral function beta.

pub mod band;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod geom;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar for the CLI and the stated tolerances.
pub type Real = f64;
