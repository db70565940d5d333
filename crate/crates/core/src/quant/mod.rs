//! Symmetric per-tensor quantization with clipping, and the sparse-salient
//! plus dense-residual decomposition built on it.

mod grid;
mod layer;

pub use grid::{clip_threshold, QuantConfig, QuantGrid};
pub use layer::{
    quantize_on_grid, quantize_residual, quantize_unprotected, reconstruct, QuantizedLayer,
    SalientEntry,
};
