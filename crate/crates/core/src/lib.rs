//! Numerical laboratory for Bergman kernels of bounded domains in ℂⁿ.
//!
//! Closed-form and estimated kernels ([`kernels`]), their metrics and
//! curvature ([`diffgeo`]), moment data ([`moments`]), explicit
//! biholomorphisms ([`maps`]) and a seeded verification registry
//! ([`verify`]) on top of shared types, domains and integration engines.

pub mod diffgeo;
pub mod domain;
pub mod error;
pub mod integrate;
pub mod kernels;
pub mod maps;
pub mod moments;
pub mod types;
pub mod verify;
pub mod wire;

pub use domain::DomainDescriptor;
pub use error::{BergmanError, Result};
pub use kernels::KernelModel;
pub use types::{CMatrix, ComplexPoint, HermitianForm, MultiIndex, C64};
