//! Hamming compressed sensing (HCS): recovery of a k-bit quantized signal
//! directly from one-bit sign measurements.
//!
//! The pipeline: a unit signal x is measured as `y = sign(Ax)` for a
//! Gaussian ensemble A. Each coordinate's disagreement rate with the
//! matrix-entry signs estimates `arccos(x_i)/pi`, and a nearest-neighbor
//! search in KL divergence over a fixed Bernoulli grid returns the
//! quantization interval of x_i without reconstructing x. Optional
//! dequantizers (interval midpoints, BIHT, box-constrained BIHT) map the
//! intervals back to a unit vector.

pub mod error;
pub mod measurement;
pub mod bench;
pub mod bounds;
pub mod dequantizer;
pub mod quantizer;
pub mod recovery;

pub use error::{HcsError, Result};
