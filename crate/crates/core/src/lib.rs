//! Coherence functional of a two-path electron interferometer when one or
//! more modes of the electromagnetic field are prepared in a squeezed vacuum.
//!
//! The crate is organised bottom-up:
//!
//! - [`squeezed`]: squeeze-parameter algebra and renormalized energy density
//! - [`trajectory`]: the polynomial electron path and its velocity
//! - [`single_mode`]: closed forms for one excited mode (W_R, averages, bounds)
//! - [`quadrature`]: composite Gauss–Legendre rules
//! - [`oracle`]: brute-force double integrals certifying the closed forms
//! - [`band`]: finite-bandwidth multimode results
//! - [`estimates`]: the envelope function F(x) and scenario estimates
//! - [`cli`]: batch front end producing CSV
//!
//! Natural (Lorentz–Heaviside) units with ħ = c = 1 are used throughout, so
//! e² = 4π α_fs.

pub mod band;
pub mod cli;
pub mod error;
pub mod estimates;
pub mod oracle;
pub mod quadrature;
pub mod single_mode;
pub mod squeezed;
pub mod trajectory;

pub use error::{Error, Result};

/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 1.0 / 137.035_999_084;

/// Electron charge squared in Lorentz–Heaviside units.
pub const E_SQUARED: f64 = 4.0 * std::f64::consts::PI * FINE_STRUCTURE;
