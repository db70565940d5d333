use nalgebra::{Cholesky, DMatrix};

use super::{Method, ScoreMatrix};
use crate::error::{Error, Result};
use crate::io::{CalibrationBatch, WeightMatrix};

/// Empirical layer Hessian `H = (2/N) XᵀX` with the diagonal of its damped
/// inverse.
#[derive(Debug, Clone)]
pub struct HessianInfo {
    matrix: DMatrix<f64>,
    damping: f64,
    inverse_diag: Vec<f64>,
}

impl HessianInfo {
    pub fn from_calibration(x: &CalibrationBatch, damping: f64) -> Result<Self> {
        let matrix = compute_hessian(x);
        let inverse_diag = damped_inverse_diag(&matrix, damping)?;
        Ok(Self {
            matrix,
            damping,
            inverse_diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn inverse_diag(&self) -> &[f64] {
        &self.inverse_diag
    }
}

/// `(2/N) XᵀX`, symmetrized so the result is exactly symmetric.
pub fn compute_hessian(x: &CalibrationBatch) -> DMatrix<f64> {
    let xm = x.to_f64();
    let mut h = xm.transpose() * &xm;
    h *= 2.0 / x.samples() as f64;
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Diagonal of `(H + λ·mean(diag H)·I)⁻¹` via a Cholesky factorization.
///
/// When `H` is entirely zero the relative term vanishes and `λ·I` is used
/// instead, so a PSD input always factors.
pub fn damped_inverse_diag(h: &DMatrix<f64>, damping: f64) -> Result<Vec<f64>> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(Error::shape("Hessian", "square matrix", format!("{}x{}", d, h.ncols())));
    }
    let mean_diag = h.diagonal().sum() / d as f64;
    let shift = if mean_diag > 0.0 { damping * mean_diag } else { damping };
    let mut hd = h.clone();
    for j in 0..d {
        hd[(j, j)] += shift;
    }

    let chol = Cholesky::new(hd).ok_or_else(|| {
        Error::Numerical("damped Hessian is not positive definite; is H PSD?".into())
    })?;
    // H⁻¹ = L⁻ᵀ L⁻¹, so [H⁻¹]_jj is the squared norm of column j of L⁻¹.
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let diag: Vec<f64> = (0..d).map(|j| l_inv.column(j).norm_squared()).collect();
    if let Some(j) = diag.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numerical(format!("inverse diagonal entry {j} is {}", diag[j])));
    }
    Ok(diag)
}

/// `w_ij² / [H⁻¹]_jj`.
pub fn score_spqr(w: &WeightMatrix, h: &HessianInfo) -> Result<ScoreMatrix> {
    if h.dim() != w.cols() {
        return Err(Error::shape(
            format!("Hessian scoring (layer `{}`)", w.name()),
            format!("d_in = {}", w.cols()),
            format!("d_in = {}", h.dim()),
        ));
    }
    let cols = w.cols();
    let scores = w
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v as f64;
            (v * v / h.inverse_diag[i % cols]) as f32
        })
        .collect();
    Ok(ScoreMatrix::new(w.name(), w.rows(), cols, scores, Method::Spqr))
}
