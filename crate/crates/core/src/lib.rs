//! Exact finite tools for fixed-size set families in Hamming space and for
//! the shift analysis of monotone clique circuits.

pub mod binom;
pub mod calibration;
pub mod circuit;
pub mod error;
pub mod family;
pub mod generator;
pub mod logval;
pub mod shift;
pub mod subset;
pub mod sunflower;

pub use error::{Error, Limits, Result};
pub use family::SetFamily;
pub use logval::LogValue;
pub use subset::Subset;
