//! Mixed-precision weight quantization that keeps a sparse set of salient
//! weights in FP32 and quantizes the dense residual to a low-bit symmetric
//! grid (`W ≈ S + Q`).
//!
//! Salient weights are chosen by one of four scores (see [`saliency`]):
//! uniform random, activation-aware, Hessian-based, or the magnitude of the
//! weight matrix's rank-`r` principal reconstruction, which needs no
//! calibration data. [`analysis`] measures how the selections overlap and
//! how well each one preserves the layer.

pub mod analysis;
mod error;
pub mod io;
pub mod quant;
pub mod saliency;

pub use error::{ConfigError, Error, Result};

/// Default hyperparameters.
pub mod defaults {
    pub const BITS: u8 = 4;
    /// Clipping threshold in population standard deviations of `W`.
    pub const CLIP_SIGMA: f32 = 2.5;
    pub const RANK: usize = 8;
    /// Relative Hessian damping.
    pub const DAMPING: f64 = 0.01;
    /// Protected weights per layer.
    pub const BUDGETS: [usize; 6] = [1, 16, 64, 256, 1024, 4096];
    pub const SEED: u64 = 0;
    /// Calibration rows per layer used by the bundled synthetic data.
    pub const CALIBRATION_SAMPLES: usize = 128;
}
