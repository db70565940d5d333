use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io::{CalibrationBatch, WeightMatrix};
use crate::quant::{reconstruct, QuantizedLayer};
use crate::saliency::SelectionMask;

/// `|A ∩ B| / |A ∪ B|`; two empty masks count as identical.
pub fn iou(a: &SelectionMask, b: &SelectionMask) -> Result<f64> {
    if a.layer() != b.layer() {
        return Err(Error::Usage(format!(
            "cannot compare masks of different layers (`{}` vs `{}`)",
            a.layer(),
            b.layer()
        )));
    }
    // both index lists are sorted, so a merge walk counts the intersection
    let (x, y) = (a.indices(), b.indices());
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = x.len() + y.len() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

fn check_same_shape(w: &WeightMatrix, q: &QuantizedLayer) -> Result<()> {
    if (w.rows(), w.cols()) != (q.rows(), q.cols()) {
        return Err(Error::shape(
            format!("error measurement (layer `{}`)", w.name()),
            format!("{}x{}", w.rows(), w.cols()),
            format!("{}x{}", q.rows(), q.cols()),
        ));
    }
    Ok(())
}

/// `‖W − Ŵ‖_F / ‖W‖_F`. A zero `W` gives 0 if `Ŵ` is zero too and `+∞`
/// (degenerate) otherwise.
pub fn reconstruction_error(w: &WeightMatrix, q: &QuantizedLayer) -> Result<f64> {
    check_same_shape(w, q)?;
    let w_hat = reconstruct(q);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&a, &b) in w.data().iter().zip(w_hat.data()) {
        let d = a as f64 - b as f64;
        num += d * d;
        den += a as f64 * a as f64;
    }
    Ok(relative(num.sqrt(), den.sqrt(), true))
}

/// `‖XWᵀ − XŴᵀ‖_F / ‖XWᵀ‖_F`. A zero `XWᵀ` is reported as `+∞`.
pub fn output_error(w: &WeightMatrix, q: &QuantizedLayer, x: &CalibrationBatch) -> Result<f64> {
    check_same_shape(w, q)?;
    x.check_layer(w, "output error")?;
    let xm = x.to_f64();
    let wm = w.to_f64();
    let delta: DMatrix<f64> = &wm - reconstruct(q).to_f64();
    let num = (&xm * delta.transpose()).norm();
    let den = (&xm * wm.transpose()).norm();
    Ok(relative(num, den, false))
}

fn relative(num: f64, den: f64, zero_over_zero_ok: bool) -> f64 {
    if den > 0.0 {
        num / den
    } else if zero_over_zero_ok && num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{quantize_residual, quantize_unprotected, QuantConfig};
    use crate::saliency::Method;

    fn mask(idx: &[(usize, usize)]) -> SelectionMask {
        SelectionMask::from_indices("l", Method::Svd, idx.len(), idx.to_vec())
    }

    #[test]
    fn iou_set_arithmetic() {
        let a = mask(&[(0, 0), (1, 1)]);
        let b = mask(&[(1, 1), (2, 2)]);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &mask(&[(5, 5)])).unwrap(), 0.0);
        assert_eq!(iou(&mask(&[]), &mask(&[])).unwrap(), 1.0);
    }

    #[test]
    fn iou_rejects_other_layers() {
        let a = mask(&[(0, 0)]);
        let b = SelectionMask::from_indices("other", Method::Svd, 1, vec![(0, 0)]);
        assert!(matches!(iou(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn fully_protected_layer_has_zero_error() {
        let w = WeightMatrix::from_fn("l", 2, 3, |r, c| r as f32 * 0.7 - c as f32 * 1.3).unwrap();
        let all: Vec<_> = (0..2).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
        let q = quantize_residual(&w, &mask(&all), &QuantConfig::default()).unwrap();
        assert_eq!(reconstruction_error(&w, &q).unwrap(), 0.0);
        let x = CalibrationBatch::new("l", 2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0]).unwrap();
        assert_eq!(output_error(&w, &q, &x).unwrap(), 0.0);
    }

    #[test]
    fn on_grid_layer_has_zero_error() {
        let w = WeightMatrix::new("l", 1, 2, vec![0.0, 7.0]).unwrap();
        let q = quantize_unprotected(&w, &QuantConfig::default());
        assert_eq!(reconstruction_error(&w, &q).unwrap(), 0.0);
    }

    #[test]
    fn zero_layer_reconstructs_with_zero_error() {
        let w = WeightMatrix::new("l", 2, 2, vec![0.0; 4]).unwrap();
        let q = quantize_unprotected(&w, &QuantConfig::default());
        assert_eq!(reconstruction_error(&w, &q).unwrap(), 0.0);
    }

    #[test]
    fn zero_activations_are_degenerate() {
        let w = WeightMatrix::new("l", 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = quantize_unprotected(&w, &QuantConfig::default());
        let x = CalibrationBatch::new("l", 3, 2, vec![0.0; 6]).unwrap();
        assert_eq!(output_error(&w, &q, &x).unwrap(), f64::INFINITY);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let w = WeightMatrix::new("l", 2, 2, vec![1.0; 4]).unwrap();
        let other = WeightMatrix::new("l", 1, 4, vec![1.0; 4]).unwrap();
        let q = quantize_unprotected(&other, &QuantConfig::default());
        assert!(matches!(reconstruction_error(&w, &q), Err(Error::Shape { .. })));
    }
}
