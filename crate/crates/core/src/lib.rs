//! Exact left/right spectra, pseudospectra and condition pseudospectra of
//! bounded operators on `Q_p^n` and `c_0(Q_p)`.

pub mod error;
pub mod inverse;
pub mod json;
pub mod lab;
pub mod matrix;
pub mod operator;
pub mod padic;
pub mod sample;
pub mod sequence;
pub mod spectral;

pub use error::{Error, Result};
