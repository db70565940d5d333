use crate::error::{Error, Result};
use crate::io::WeightMatrix;

/// Bit-width and clipping multiplier of the symmetric quantizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantConfig {
    bits: u8,
    clip_sigma: f32,
}

impl QuantConfig {
    pub fn new(bits: u8, clip_sigma: f32) -> Result<Self> {
        if !(2..=8).contains(&bits) {
            return Err(Error::Usage(format!("bits must be in [2, 8], got {bits}")));
        }
        if !(clip_sigma.is_finite() && clip_sigma > 0.0) {
            return Err(Error::Usage(format!("clip multiplier must be > 0, got {clip_sigma}")));
        }
        Ok(Self { bits, clip_sigma })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn clip_sigma(&self) -> f32 {
        self.clip_sigma
    }

    /// Largest code magnitude, `2^(b-1) - 1`. The code range is symmetric.
    pub fn qmax(&self) -> i32 {
        (1 << (self.bits - 1)) - 1
    }
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            bits: crate::defaults::BITS,
            clip_sigma: crate::defaults::CLIP_SIGMA,
        }
    }
}

/// `clip_sigma` times the population standard deviation of every entry of `w`.
pub fn clip_threshold(w: &WeightMatrix, clip_sigma: f32) -> f32 {
    let n = w.len() as f64;
    let mean = w.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = w
        .data()
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (clip_sigma as f64 * var.sqrt()) as f32
}

/// A fixed quantization grid: clip to `±threshold`, then round to the
/// nearest multiple of `scale`.
///
/// Scales produced by [`QuantGrid::fit`] keep at most `24 - bits`
/// significant bits so that every grid point `code * scale` and every
/// midpoint between neighbours is exact in `f32`. Dequantization therefore
/// adds no rounding of its own and the `scale / 2` error bound holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantGrid {
    scale: f32,
    threshold: f32,
    qmax: i32,
}

impl QuantGrid {
    /// Grid for `values` (already clipped or not) under `threshold`.
    /// An all-zero input gets `scale = 1`.
    pub fn fit(values: impl IntoIterator<Item = f32>, threshold: f32, cfg: &QuantConfig) -> Self {
        let max_abs = values
            .into_iter()
            .map(|v| v.abs().min(threshold))
            .fold(0.0f32, f32::max);
        let qmax = cfg.qmax();
        let scale = if max_abs > 0.0 {
            representable_scale(max_abs as f64 / qmax as f64, cfg.bits)
        } else {
            1.0
        };
        Self {
            scale,
            threshold,
            qmax,
        }
    }

    /// A grid with an explicit scale, for callers that pin the step size.
    pub fn with_scale(scale: f32, threshold: f32, cfg: &QuantConfig) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
        Self {
            scale,
            threshold,
            qmax: cfg.qmax(),
        }
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn threshold(&self) -> f32 {
        self.threshold
    }

    pub fn qmax(&self) -> i32 {
        self.qmax
    }

    /// Clip, divide, round half away from zero, saturate to the code range.
    pub fn encode(&self, v: f32) -> i8 {
        let clipped = v.clamp(-self.threshold, self.threshold);
        let q = (clipped as f64 / self.scale as f64).round();
        q.clamp(-self.qmax as f64, self.qmax as f64) as i8
    }

    pub fn decode(&self, code: i8) -> f32 {
        code as f32 * self.scale
    }

    /// Absolute error of quantizing `v` on this grid.
    pub fn error(&self, v: f32) -> f32 {
        (self.decode(self.encode(v)) - v).abs()
    }
}

/// Rounds `raw` up to `24 - bits` significant bits.
fn representable_scale(raw: f64, bits: u8) -> f32 {
    debug_assert!(raw > 0.0 && raw.is_finite());
    let keep = 24 - bits as i32;
    let exp = raw.log2().floor() as i32;
    let ulp = 2f64.powi(exp - (keep - 1));
    let s = ((raw / ulp).ceil() * ulp) as f32;
    if s > 0.0 {
        s
    } else {
        f32::MIN_POSITIVE
    }
}
