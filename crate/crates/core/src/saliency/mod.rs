//! Importance scores for choosing which weights stay at full precision.
//!
//! Four heuristics are provided. [`score_random`] is the uniform baseline,
//! [`score_awq`] weights magnitudes by input-channel activation norms,
//! [`score_spqr`] divides squared weights by the damped inverse-Hessian
//! diagonal, and [`score_svd`] uses the magnitude of the rank-`r` principal
//! reconstruction of the weights alone. Every score feeds the same
//! [`top_k_select`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

mod awq;
mod hessian;
mod random;
mod select;
mod svd;

pub use awq::score_awq;
pub use hessian::{compute_hessian, damped_inverse_diag, score_spqr, HessianInfo};
pub use random::score_random;
pub use select::{top_k_select, SelectionMask};
pub use svd::{score_svd, score_svd_with, truncated_svd, truncated_svd_with, PrincipalStructure, SvdOptions, SvdStrategy};

use crate::error::{Error, Result};
use crate::io::{CalibrationBatch, WeightMatrix};

/// Knobs shared by the scorers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    /// SVD rank `r`.
    pub rank: usize,
    /// Relative Hessian damping `λ`.
    pub damping: f64,
    /// Seeds the random permutation and the randomized SVD sketch.
    pub seed: u64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            rank: crate::defaults::RANK,
            damping: crate::defaults::DAMPING,
            seed: crate::defaults::SEED,
        }
    }
}

/// Scores `w` with `method`, or `None` for [`Method::None`]. `awq` and
/// `spqr` need `x` and fail with a usage error without it.
pub fn score_layer(
    w: &WeightMatrix,
    x: Option<&CalibrationBatch>,
    method: Method,
    p: &ScoreParams,
) -> Result<Option<ScoreMatrix>> {
    let need_calib = || {
        x.ok_or_else(|| {
            Error::Usage(format!("method {method} needs a calibration batch for layer `{}`", w.name()))
        })
    };
    Ok(Some(match method {
        Method::None => return Ok(None),
        Method::Random => score_random(w, p.seed),
        Method::Awq => score_awq(w, need_calib()?)?,
        Method::Spqr => score_spqr(w, &HessianInfo::from_calibration(need_calib()?, p.damping)?)?,
        Method::Svd => score_svd_with(
            w,
            p.rank,
            SvdOptions {
                seed: p.seed,
                ..SvdOptions::default()
            },
        ),
    }))
}

/// Selection heuristic. `None` is the unprotected baseline and never
/// produces scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Awq,
    Spqr,
    Svd,
    None,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Random, Method::Awq, Method::Spqr, Method::Svd, Method::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Awq => "awq",
            Method::Spqr => "spqr",
            Method::Svd => "svd",
            Method::None => "none",
        }
    }

    pub fn needs_calibration(self) -> bool {
        matches!(self, Method::Awq | Method::Spqr)
    }

    pub fn selects(self) -> bool {
        self != Method::None
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Non-negative importance per weight, same shape as the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    layer: String,
    rows: usize,
    cols: usize,
    scores: Vec<f32>,
    method: Method,
    seed: Option<u64>,
}

impl ScoreMatrix {
    /// Panics on negative or non-finite scores; every scorer in this module
    /// upholds that.
    pub fn new(layer: impl Into<String>, rows: usize, cols: usize, scores: Vec<f32>, method: Method) -> Self {
        assert_eq!(scores.len(), rows * cols, "score count must match shape");
        assert!(
            scores.iter().all(|s| s.is_finite() && *s >= 0.0),
            "scores must be finite and non-negative"
        );
        Self {
            layer: layer.into(),
            rows,
            cols,
            scores,
            method,
            seed: None,
        }
    }

    pub(crate) fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.scores[row * self.cols + col]
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Mixes a user seed with string labels into an RNG seed that is stable
/// across platforms and releases.
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
