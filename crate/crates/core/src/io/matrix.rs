use std::path::Path;

use nalgebra::DMatrix;

use super::npy::{self, Dtype};
use crate::error::{Error, Result};

/// Dense FP32 weights of one linear layer, `rows = d_out`, `cols = d_in`,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl WeightMatrix {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        check_dims("weight matrix", rows, cols, data.len())?;
        check_finite("weight matrix", &data)?;
        Ok(Self {
            name: name.into(),
            rows,
            cols,
            data,
        })
    }

    pub fn from_fn(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::new(name, rows, cols, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Returns a copy with every entry multiplied by `c`.
    pub fn scaled(&self, c: f32) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    pub(crate) fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|&v| v as f64))
    }
}

/// Calibration activations `X` (`samples × features`) feeding one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBatch {
    layer: String,
    samples: usize,
    features: usize,
    data: Vec<f32>,
}

impl CalibrationBatch {
    pub fn new(
        layer: impl Into<String>,
        samples: usize,
        features: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        check_dims("calibration batch", samples, features, data.len())?;
        check_finite("calibration batch", &data)?;
        Ok(Self {
            layer: layer.into(),
            samples,
            features,
            data,
        })
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, sample: usize, feature: usize) -> f32 {
        self.data[sample * self.features + feature]
    }

    pub(crate) fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.samples,
            self.features,
            self.data.iter().map(|&v| v as f64),
        )
    }

    pub(crate) fn check_layer(&self, w: &WeightMatrix, context: &str) -> Result<()> {
        if self.features != w.cols() {
            return Err(Error::shape(
                format!("{context} (layer `{}`)", w.name()),
                format!("d_in = {}", w.cols()),
                format!("d_in = {}", self.features),
            ));
        }
        Ok(())
    }
}

fn check_dims(what: &str, rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::shape(what, "at least 1x1", format!("{rows}x{cols}")));
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::shape(
            what,
            format!("{} values for {rows}x{cols}", rows.saturating_mul(cols)),
            format!("{len} values"),
        ));
    }
    Ok(())
}

fn check_finite(what: &str, data: &[f32]) -> Result<()> {
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::DataIntegrity(format!(
            "{what} has non-finite value {} at flat index {pos}",
            data[pos]
        )));
    }
    Ok(())
}

/// Reads a 2-D `<f4` C-order NPY file. Non-finite values are rejected.
fn load_f32_2d(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let raw = npy::read_file(path)?;
    if raw.dtype != Dtype::F32 {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            detail: format!("expected dtype <f4, found {}", raw.dtype.descr()),
        });
    }
    let [rows, cols] = raw.shape[..] else {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            detail: format!("expected a 2-D array, found shape {:?}", raw.shape),
        });
    };
    if rows == 0 || cols == 0 {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            detail: format!("empty array of shape ({rows}, {cols})"),
        });
    }
    let data = raw.to_f32();
    check_finite(&path.display().to_string(), &data)?;
    Ok((rows, cols, data))
}

/// Stem of a path with any trailing `.calib` removed.
pub(crate) fn layer_name_of(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.strip_suffix(".calib").map(str::to_owned).unwrap_or(stem)
}

/// Loads a weight matrix; its name is the file stem.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<WeightMatrix> {
    let path = path.as_ref();
    let (rows, cols, data) = load_f32_2d(path)?;
    WeightMatrix::new(layer_name_of(path), rows, cols, data)
}

/// Writes `m` as NPY v1.0 `<f4`. Nothing is written if `m` holds a
/// non-finite value.
pub fn save_matrix(m: &WeightMatrix, path: impl AsRef<Path>) -> Result<()> {
    check_finite("weight matrix", m.data())?;
    save_f32(path.as_ref(), &[m.rows(), m.cols()], m.data())
}

pub fn save_calibration(x: &CalibrationBatch, path: impl AsRef<Path>) -> Result<()> {
    check_finite("calibration batch", x.data())?;
    save_f32(path.as_ref(), &[x.samples(), x.features()], x.data())
}

pub(crate) fn save_f32(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    let payload: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    npy::write_file(path, Dtype::F32, shape, &payload)
}

/// Loads calibration activations for `layer`, checking `d_in` against the
/// layer's column count.
pub fn load_calibration(path: impl AsRef<Path>, layer: &WeightMatrix) -> Result<CalibrationBatch> {
    let path = path.as_ref();
    let (rows, cols, data) = load_f32_2d(path)?;
    if cols != layer.cols() {
        return Err(Error::shape(
            format!("calibration {} for layer `{}`", path.display(), layer.name()),
            format!("d_in = {}", layer.cols()),
            format!("d_in = {cols}"),
        ));
    }
    CalibrationBatch::new(layer.name(), rows, cols, data)
}

/// A layer file together with its optional sibling `<name>.calib.npy`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerEntry {
    pub name: String,
    pub weights: std::path::PathBuf,
    pub calibration: Option<std::path::PathBuf>,
}

/// Lists the weight files of a flat layer directory, sorted by name.
/// `*.calib.npy` files are attached to the layer they belong to.
pub fn scan_layer_dir(dir: impl AsRef<Path>) -> Result<Vec<LayerEntry>> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for item in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = item.map_err(|e| Error::io(dir, e))?.path();
        let Some(file) = path.file_name().and_then(|f| f.to_str()) else {
            continue;
        };
        if !path.is_file() || !file.ends_with(".npy") || file.ends_with(".calib.npy") {
            continue;
        }
        let name = layer_name_of(&path);
        let calib = dir.join(format!("{name}.calib.npy"));
        entries.push(LayerEntry {
            calibration: calib.is_file().then_some(calib),
            name,
            weights: path,
        });
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}
