//! Writes synthetic layers with planted outliers, plus their calibration
//! batches, into a directory usable by `salq sweep`.
//!
//!     cargo run --release -p salient-quant --example make_synthetic -- data 256 4

use salient_quant::analysis::synthetic::{synthetic_layer, SyntheticSpec};
use salient_quant::io::{save_calibration, save_matrix};

fn main() -> salient_quant::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data".into());
    let d: usize = args.next().map_or(256, |s| s.parse().expect("dimension is an integer"));
    let count: u64 = args.next().map_or(4, |s| s.parse().expect("layer count is an integer"));

    std::fs::create_dir_all(&dir).map_err(|source| salient_quant::Error::Io {
        path: dir.clone().into(),
        source,
    })?;
    let spec = SyntheticSpec::square(d);
    for i in 0..count {
        let name = format!("layer{i}");
        let l = synthetic_layer(&spec, &name, i);
        save_matrix(&l.weights, format!("{dir}/{name}.npy"))?;
        save_calibration(&l.calibration, format!("{dir}/{name}.calib.npy"))?;
    }
    println!("wrote {count} layers of {d}x{d} to {dir}/");
    Ok(())
}
