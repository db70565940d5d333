//! Selection overlap, error measurement, budget sweeps and reference
//! oracles.

mod metrics;
mod oracle;
mod sweep;
pub mod synthetic;
pub mod table;

pub use metrics::{iou, output_error, reconstruction_error};
pub use oracle::{oracle_select, unprotected_grid};
pub use sweep::{
    run_sweep, run_sweep_in_memory, run_sweep_ordered, write_outputs, CellOrder, ErrorRecord,
    OverlapRecord, SweepReport,
};
