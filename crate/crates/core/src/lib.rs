//! Exact Boolean-Fourier spectra, the influence-adaptive butterfly
//! contraction invariant, and certified ternary Walsh-threshold masks for
//! Boolean functions on up to five variables.

pub mod analytics;
pub mod cancellation;
pub mod certstore;
pub mod contraction;
pub mod error;
pub mod families;
pub mod influence;
pub mod minsupport;
pub mod npn;
pub mod stats;
pub mod synthesis;
pub mod walsh;

pub use error::{Error, Result};
