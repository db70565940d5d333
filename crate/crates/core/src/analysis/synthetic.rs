//! Synthetic layers with planted outliers, for benchmarks and tests.
//!
//! Weights are standard Gaussian. A set of input columns is marked as
//! outlier columns; `outlier_entries` weights inside those columns are
//! multiplied by `weight_outlier_scale`, and the matching activation columns
//! of the calibration batch by `activation_outlier_scale`. Activation-aware
//! scores boost every weight in those columns while the structural outliers
//! are only the planted entries, so the two populations overlap partially.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::io::{CalibrationBatch, WeightMatrix};
use crate::saliency::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub samples: usize,
    pub outlier_cols: usize,
    pub outlier_entries: usize,
    pub weight_outlier_scale: f32,
    pub activation_outlier_scale: f32,
}

impl SyntheticSpec {
    /// Square `d × d` layer with 128 calibration rows, 4 outlier columns and
    /// 64 planted entries. Four outlier directions fit inside the default
    /// rank-8 principal structure.
    pub fn square(d: usize) -> Self {
        Self {
            rows: d,
            cols: d,
            samples: crate::defaults::CALIBRATION_SAMPLES,
            outlier_cols: 4.min(d),
            outlier_entries: 64.min(4.min(d) * d),
            weight_outlier_scale: 10.0,
            activation_outlier_scale: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLayer {
    pub weights: WeightMatrix,
    pub calibration: CalibrationBatch,
    /// Sorted outlier input columns.
    pub outlier_cols: Vec<usize>,
    /// Planted `(row, col)` outlier positions, sorted.
    pub outliers: Vec<(usize, usize)>,
}

pub fn synthetic_layer(spec: &SyntheticSpec, name: &str, seed: u64) -> SyntheticLayer {
    assert!(spec.outlier_cols <= spec.cols, "more outlier columns than columns");
    assert!(
        spec.outlier_entries <= spec.outlier_cols * spec.rows,
        "outlier entries do not fit in the outlier columns"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["synthetic", name]));

    let mut w: Vec<f32> = (0..spec.rows * spec.cols)
        .map(|_| rng.sample::<f32, _>(StandardNormal))
        .collect();
    let mut outlier_cols = index::sample(&mut rng, spec.cols, spec.outlier_cols).into_vec();
    outlier_cols.sort_unstable();

    let slots = spec.outlier_cols * spec.rows;
    let mut outliers: Vec<(usize, usize)> = index::sample(&mut rng, slots, spec.outlier_entries)
        .into_iter()
        .map(|s| (s % spec.rows, outlier_cols[s / spec.rows]))
        .collect();
    outliers.sort_unstable();
    for &(r, c) in &outliers {
        w[r * spec.cols + c] *= spec.weight_outlier_scale;
    }

    let mut x: Vec<f32> = (0..spec.samples * spec.cols)
        .map(|_| rng.sample::<f32, _>(StandardNormal))
        .collect();
    for row in x.chunks_exact_mut(spec.cols) {
        for &c in &outlier_cols {
            row[c] *= spec.activation_outlier_scale;
        }
    }

    SyntheticLayer {
        weights: WeightMatrix::new(name, spec.rows, spec.cols, w).expect("finite draws"),
        calibration: CalibrationBatch::new(name, spec.samples, spec.cols, x).expect("finite draws"),
        outlier_cols,
        outliers,
    }
}
