use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{clip_threshold, QuantConfig, QuantGrid};
use crate::error::{Error, Result};
use crate::io::npy::{self, Dtype};
use crate::io::{save_f32, WeightMatrix};
use crate::saliency::{Method, SelectionMask};

/// One protected weight kept at full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalientEntry {
    pub row: usize,
    pub col: usize,
    pub value: f32,
}

/// `W ≈ S + Q`: a sparse set of exact FP32 entries plus dense integer codes
/// on a per-tensor grid. Codes at protected positions are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer {
    layer: String,
    rows: usize,
    cols: usize,
    salient: Vec<SalientEntry>,
    codes: Vec<i8>,
    grid: QuantGrid,
    config: QuantConfig,
    method: Method,
    k: usize,
}

impl QuantizedLayer {
    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Protected entries in row-major order.
    pub fn salient(&self) -> &[SalientEntry] {
        &self.salient
    }

    pub fn codes(&self) -> &[i8] {
        &self.codes
    }

    pub fn scale(&self) -> f32 {
        self.grid.scale()
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    pub fn config(&self) -> &QuantConfig {
        &self.config
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// The requested budget (may exceed `salient().len()` for tiny layers).
    pub fn k(&self) -> usize {
        self.k
    }
}

fn protected_flags(w: &WeightMatrix, mask: &SelectionMask) -> Result<Vec<bool>> {
    let mut flags = vec![false; w.len()];
    for &(row, col) in mask.indices() {
        if row >= w.rows() || col >= w.cols() {
            return Err(Error::Index {
                row,
                col,
                rows: w.rows(),
                cols: w.cols(),
            });
        }
        flags[row * w.cols() + col] = true;
    }
    Ok(flags)
}

/// Zeroes the masked entries of `w`, fits a grid to the clipped residual and
/// encodes it. Masked entries are kept verbatim in the salient component.
pub fn quantize_residual(
    w: &WeightMatrix,
    mask: &SelectionMask,
    cfg: &QuantConfig,
) -> Result<QuantizedLayer> {
    let flags = protected_flags(w, mask)?;
    let threshold = clip_threshold(w, cfg.clip_sigma());
    let residual = w
        .data()
        .iter()
        .zip(&flags)
        .map(|(&v, &p)| if p { 0.0 } else { v });
    let grid = QuantGrid::fit(residual, threshold, cfg);
    build(w, mask, flags, grid, cfg)
}

/// Like [`quantize_residual`] but on a caller-supplied grid, so that
/// different masks can be compared at identical step size.
pub fn quantize_on_grid(
    w: &WeightMatrix,
    mask: &SelectionMask,
    grid: QuantGrid,
    cfg: &QuantConfig,
) -> Result<QuantizedLayer> {
    let flags = protected_flags(w, mask)?;
    build(w, mask, flags, grid, cfg)
}

/// The `k = 0` baseline: every weight on the 4-bit grid.
pub fn quantize_unprotected(w: &WeightMatrix, cfg: &QuantConfig) -> QuantizedLayer {
    let mask = SelectionMask::empty(w.name(), Method::None);
    quantize_residual(w, &mask, cfg).expect("empty mask is always in range")
}

fn build(
    w: &WeightMatrix,
    mask: &SelectionMask,
    flags: Vec<bool>,
    grid: QuantGrid,
    cfg: &QuantConfig,
) -> Result<QuantizedLayer> {
    let mut salient = Vec::with_capacity(mask.len());
    let mut codes = Vec::with_capacity(w.len());
    for (i, (&v, &p)) in w.data().iter().zip(&flags).enumerate() {
        if p {
            salient.push(SalientEntry {
                row: i / w.cols(),
                col: i % w.cols(),
                value: v,
            });
            codes.push(0);
        } else {
            codes.push(grid.encode(v));
        }
    }
    Ok(QuantizedLayer {
        layer: w.name().to_owned(),
        rows: w.rows(),
        cols: w.cols(),
        salient,
        codes,
        grid,
        config: *cfg,
        method: mask.method(),
        k: mask.k(),
    })
}

/// `Ŵ = S + scale · codes`.
pub fn reconstruct(q: &QuantizedLayer) -> WeightMatrix {
    let mut data: Vec<f32> = q.codes.iter().map(|&c| q.grid.decode(c)).collect();
    for s in &q.salient {
        data[s.row * q.cols + s.col] = s.value;
    }
    WeightMatrix::new(q.layer.clone(), q.rows, q.cols, data).expect("reconstruction is finite")
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    layer: String,
    rows: usize,
    cols: usize,
    scale: f32,
    clip_threshold: f32,
    bits: u8,
    clip_sigma: f32,
    method: Method,
    k: usize,
}

const CODES_FILE: &str = "codes.npy";
const SALIENT_FILE: &str = "salient.npy";
const META_FILE: &str = "meta.json";

impl QuantizedLayer {
    /// Writes `codes.npy` (int8), `salient.npy` (float32 `[row, col, value]`
    /// rows) and `meta.json` into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let codes: Vec<u8> = self.codes.iter().map(|&c| c as u8).collect();
        npy::write_file(&dir.join(CODES_FILE), Dtype::I8, &[self.rows, self.cols], &codes)?;

        let triples: Vec<f32> = self
            .salient
            .iter()
            .flat_map(|s| [s.row as f32, s.col as f32, s.value])
            .collect();
        save_f32(&dir.join(SALIENT_FILE), &[self.salient.len(), 3], &triples)?;

        let meta = Meta {
            layer: self.layer.clone(),
            rows: self.rows,
            cols: self.cols,
            scale: self.grid.scale(),
            clip_threshold: self.grid.threshold(),
            bits: self.config.bits(),
            clip_sigma: self.config.clip_sigma(),
            method: self.method,
            k: self.k,
        };
        let path = dir.join(META_FILE);
        let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(META_FILE);
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: meta_path.clone(),
            field: "meta",
            detail: e.to_string(),
        })?;
        let config = QuantConfig::new(meta.bits, meta.clip_sigma)?;

        let codes_path = dir.join(CODES_FILE);
        let raw = npy::read_file(&codes_path)?;
        if raw.dtype != Dtype::I8 || raw.shape != [meta.rows, meta.cols] {
            return Err(Error::UnsupportedLayout {
                path: codes_path,
                detail: format!(
                    "expected int8 ({}, {}), found {} {:?}",
                    meta.rows,
                    meta.cols,
                    raw.dtype.descr(),
                    raw.shape
                ),
            });
        }
        let codes = raw.to_i8();

        let salient_path = dir.join(SALIENT_FILE);
        let raw = npy::read_file(&salient_path)?;
        if raw.dtype != Dtype::F32 || raw.shape.len() != 2 || raw.shape[1] != 3 {
            return Err(Error::UnsupportedLayout {
                path: salient_path,
                detail: format!("expected float32 (n, 3), found {:?}", raw.shape),
            });
        }
        let salient = raw
            .to_f32()
            .chunks_exact(3)
            .map(|t| SalientEntry {
                row: t[0] as usize,
                col: t[1] as usize,
                value: t[2],
            })
            .collect();

        Ok(Self {
            layer: meta.layer,
            rows: meta.rows,
            cols: meta.cols,
            salient,
            codes,
            grid: QuantGrid::with_scale(meta.scale, meta.clip_threshold, &config),
            config,
            method: meta.method,
            k: meta.k,
        })
    }
}
