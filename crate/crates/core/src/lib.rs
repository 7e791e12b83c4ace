//! Rate-distortion optimized compression of dynamic Gaussian scenes.

pub mod bytes;
pub mod codec;
pub mod error;
pub mod eval;
pub mod harness;
pub mod model;
pub mod preset;
pub mod quant;
pub mod rate;
pub mod wavelet;

pub use error::{Error, Result};
