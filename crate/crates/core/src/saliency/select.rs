use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Method, ScoreMatrix};
use crate::error::{Error, Result};
use crate::io::npy::{self, Dtype};

/// The protected `(row, col)` positions of one layer, kept in row-major
/// order without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMask {
    layer: String,
    method: Method,
    k: usize,
    seed: Option<u64>,
    indices: Vec<(usize, usize)>,
}

impl SelectionMask {
    pub fn empty(layer: impl Into<String>, method: Method) -> Self {
        Self::from_indices(layer, method, 0, Vec::new())
    }

    /// Builds a mask from arbitrary indices. Indices are sorted and
    /// deduplicated; range checks happen where the mask meets a matrix.
    pub fn from_indices(
        layer: impl Into<String>,
        method: Method,
        k: usize,
        mut indices: Vec<(usize, usize)>,
    ) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self {
            layer: layer.into(),
            method,
            k,
            seed: None,
            indices,
        }
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.indices.binary_search(&(row, col)).is_ok()
    }

    /// True if every index of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SelectionMask) -> bool {
        self.indices.iter().all(|&(r, c)| other.contains(r, c))
    }
}

/// Higher score first; equal scores by ascending flat index.
fn rank_order(scores: &[f32]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Picks the `min(k, size)` highest-scoring positions. Ties go to the lower
/// row-major index, so the result is deterministic and nested in `k`.
pub fn top_k_select(scores: &ScoreMatrix, k: usize) -> SelectionMask {
    let n = scores.scores().len();
    let take = k.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    if take > 0 && take < n {
        order.select_nth_unstable_by(take - 1, rank_order(scores.scores()));
    }
    order.truncate(take);
    order.sort_unstable();
    let cols = scores.cols();
    SelectionMask {
        layer: scores.layer().to_owned(),
        method: scores.method(),
        k,
        seed: scores.seed(),
        indices: order.into_iter().map(|i| (i / cols, i % cols)).collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskMeta {
    method: Method,
    k: usize,
    seed: Option<u64>,
    layer: String,
}

impl SelectionMask {
    /// Writes `mask.npy` (int64 `[row, col]` rows in flat-index order) and
    /// `mask.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let payload: Vec<u8> = self
            .indices
            .iter()
            .flat_map(|&(r, c)| [r as i64, c as i64])
            .flat_map(i64::to_le_bytes)
            .collect();
        npy::write_file(&dir.join("mask.npy"), Dtype::I64, &[self.indices.len(), 2], &payload)?;
        let meta = MaskMeta {
            method: self.method,
            k: self.k,
            seed: self.seed,
            layer: self.layer.clone(),
        };
        let path = dir.join("mask.json");
        let mut text = serde_json::to_string_pretty(&meta).expect("mask meta serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("mask.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: MaskMeta = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.clone(),
            field: "mask",
            detail: e.to_string(),
        })?;
        let npy_path = dir.join("mask.npy");
        let raw = npy::read_file(&npy_path)?;
        if raw.dtype != Dtype::I64 || raw.shape.len() != 2 || raw.shape[1] != 2 {
            return Err(Error::UnsupportedLayout {
                path: npy_path,
                detail: format!("expected int64 (n, 2), found {:?}", raw.shape),
            });
        }
        let flat = raw.to_i64();
        if flat.iter().any(|&v| v < 0) {
            return Err(Error::DataIntegrity(format!("{}: negative index", npy_path.display())));
        }
        let indices = flat.chunks_exact(2).map(|p| (p[0] as usize, p[1] as usize)).collect();
        let mut mask = Self::from_indices(meta.layer, meta.method, meta.k, indices);
        mask.seed = meta.seed;
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(rows: usize, cols: usize, v: &[f32]) -> ScoreMatrix {
        ScoreMatrix::new("t", rows, cols, v.to_vec(), Method::Svd)
    }

    #[test]
    fn tie_goes_to_lower_flat_index() {
        let s = scores(2, 2, &[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(top_k_select(&s, 2).indices(), &[(0, 0), (1, 0)]);
    }

    #[test]
    fn zero_budget_is_empty() {
        let s = scores(2, 2, &[3.0, 1.0, 2.0, 2.0]);
        assert!(top_k_select(&s, 0).is_empty());
    }

    #[test]
    fn oversized_budget_takes_everything() {
        let s = scores(2, 2, &[3.0, 1.0, 2.0, 2.0]);
        let m = top_k_select(&s, 10);
        assert_eq!(m.len(), 4);
        assert_eq!(m.k(), 10);
    }

    #[test]
    fn all_equal_scores_take_prefix() {
        let s = scores(3, 3, &[0.0; 9]);
        assert_eq!(top_k_select(&s, 4).indices(), &[(0, 0), (0, 1), (0, 2), (1, 0)]);
    }

    #[test]
    fn from_indices_sorts_and_dedups() {
        let m = SelectionMask::from_indices("l", Method::Awq, 3, vec![(2, 0), (0, 1), (2, 0)]);
        assert_eq!(m.indices(), &[(0, 1), (2, 0)]);
        assert!(m.contains(2, 0));
        assert!(!m.contains(1, 1));
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = scores(3, 3, &[9., 8., 7., 6., 5., 4., 3., 2., 1.]).with_seed(42);
        let m = top_k_select(&s, 4);
        m.save(dir.path()).unwrap();
        assert_eq!(SelectionMask::load(dir.path()).unwrap(), m);
    }
}
