pub mod density;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod localization;
pub mod oracle;
pub mod polynomials;
pub mod ptas;
pub mod quadrature;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
