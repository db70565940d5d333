//! Matrix and configuration I/O.

mod config;
mod matrix;
pub mod npy;

pub use config::{parse_config, SweepConfig};
pub use matrix::{
    load_calibration, load_matrix, save_calibration, save_matrix, scan_layer_dir,
    CalibrationBatch, LayerEntry, WeightMatrix,
};
pub(crate) use matrix::save_f32;
