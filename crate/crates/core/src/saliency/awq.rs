use super::{Method, ScoreMatrix};
use crate::error::Result;
use crate::io::{CalibrationBatch, WeightMatrix};

/// `|w_ij| · ‖X_j‖₂`, where `X_j` is input channel `j` across all samples.
pub fn score_awq(w: &WeightMatrix, x: &CalibrationBatch) -> Result<ScoreMatrix> {
    x.check_layer(w, "activation-aware scoring")?;
    let cols = w.cols();
    let mut sq = vec![0.0f64; cols];
    for row in x.data().chunks_exact(cols) {
        for (acc, &v) in sq.iter_mut().zip(row) {
            *acc += v as f64 * v as f64;
        }
    }
    let norms: Vec<f64> = sq.into_iter().map(f64::sqrt).collect();
    let scores = w
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v.abs() as f64 * norms[i % cols]) as f32)
        .collect();
    Ok(ScoreMatrix::new(w.name(), w.rows(), cols, scores, Method::Awq))
}
