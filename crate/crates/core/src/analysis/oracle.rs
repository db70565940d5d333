use crate::io::WeightMatrix;
use crate::quant::{clip_threshold, QuantConfig, QuantGrid};
use crate::saliency::{top_k_select, Method, ScoreMatrix, SelectionMask};

/// The grid `quantize_unprotected` would use for `w`.
pub fn unprotected_grid(w: &WeightMatrix, cfg: &QuantConfig) -> QuantGrid {
    QuantGrid::fit(w.data().iter().copied(), clip_threshold(w, cfg.clip_sigma()), cfg)
}

/// Brute-force reference selection: the `k` weights with the largest
/// individual quantization error on the unprotected grid.
///
/// With the grid held fixed the squared Frobenius error is a sum of
/// independent per-weight terms, so this choice is optimal among all
/// k-subsets. The mask is tagged [`Method::None`] since it is not a
/// heuristic.
pub fn oracle_select(w: &WeightMatrix, cfg: &QuantConfig, k: usize) -> SelectionMask {
    let grid = unprotected_grid(w, cfg);
    let errors = w.data().iter().map(|&v| grid.error(v)).collect();
    let scores = ScoreMatrix::new(w.name(), w.rows(), w.cols(), errors, Method::None);
    top_k_select(&scores, k)
}
