use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{derive_seed, Method, ScoreMatrix};
use crate::io::WeightMatrix;

/// Layers whose smaller side is at most this are decomposed exactly.
pub const EXACT_SVD_MAX_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdStrategy {
    /// Exact below [`EXACT_SVD_MAX_DIM`], randomized above.
    Auto,
    Exact,
    Randomized,
}

/// How the top-`r` singular triplets are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdOptions {
    pub strategy: SvdStrategy,
    /// Mixed with the layer name to seed the randomized sketch.
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            strategy: SvdStrategy::Auto,
            seed: 0,
            oversample: 8,
            power_iters: 4,
        }
    }
}

impl SvdOptions {
    pub fn is_randomized(&self, w: &WeightMatrix) -> bool {
        match self.strategy {
            SvdStrategy::Exact => false,
            SvdStrategy::Randomized => true,
            SvdStrategy::Auto => w.rows().min(w.cols()) > EXACT_SVD_MAX_DIM,
        }
    }
}

/// Top-`r` singular triplets of `W` and the rank-`r` reconstruction
/// `U_r · diag(σ_r) · V_rᵀ`.
#[derive(Debug, Clone)]
pub struct PrincipalStructure {
    left: DMatrix<f64>,
    singular: DVector<f64>,
    right: DMatrix<f64>,
    reconstruction: DMatrix<f64>,
}

impl PrincipalStructure {
    pub fn rank(&self) -> usize {
        self.singular.len()
    }

    /// `d_out × r`, orthonormal columns.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Non-increasing, non-negative.
    pub fn singular(&self) -> &DVector<f64> {
        &self.singular
    }

    /// `d_in × r`, orthonormal columns.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn reconstruction(&self) -> &DMatrix<f64> {
        &self.reconstruction
    }
}

pub fn truncated_svd(w: &WeightMatrix, rank: usize) -> PrincipalStructure {
    truncated_svd_with(w, rank, SvdOptions::default())
}

/// `rank` is clamped to `[1, min(rows, cols)]`.
pub fn truncated_svd_with(w: &WeightMatrix, rank: usize, opts: SvdOptions) -> PrincipalStructure {
    let a = w.to_f64();
    let min_dim = w.rows().min(w.cols());
    let r = rank.clamp(1, min_dim);
    let (left, singular, right) = if opts.is_randomized(w) {
        let seed = derive_seed(opts.seed, &["svd", w.name()]);
        randomized_svd(&a, r, opts.oversample, opts.power_iters, seed)
    } else {
        exact_svd(&a, r)
    };
    let reconstruction = &left * DMatrix::from_diagonal(&singular) * right.transpose();
    PrincipalStructure {
        left,
        singular,
        right,
        reconstruction,
    }
}

/// Thin SVD of `a`, sorted by descending singular value, truncated to `r`.
fn exact_svd(a: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let m = faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("SVD of a finite matrix converges");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();

    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    order.truncate(r);

    let left = DMatrix::from_fn(a.nrows(), r, |i, c| u[(i, order[c])]);
    let right = DMatrix::from_fn(a.ncols(), r, |i, c| v[(i, order[c])]);
    let singular = DVector::from_fn(r, |c, _| s[order[c]].max(0.0));
    (left, singular, right)
}

/// Randomized range finder with subspace (power) iteration, followed by an
/// exact SVD of the small projected matrix. Costs `O(l · m · n)` per pass
/// for sketch width `l = r + oversample`.
fn randomized_svd(
    a: &DMatrix<f64>,
    r: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let l = (r + oversample).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));

    let mut q = (a * omega).qr().q();
    for _ in 0..power_iters {
        let z = (a.transpose() * &q).qr().q();
        q = (a * z).qr().q();
    }

    let b = q.transpose() * a; // l × n
    let (ub, s, v) = exact_svd(&b, r);
    (q * ub, s, v)
}

pub fn score_svd(w: &WeightMatrix, rank: usize) -> ScoreMatrix {
    score_svd_with(w, rank, SvdOptions::default())
}

/// `|(W_pri)_ij|` from the rank-`r` principal reconstruction. Uses no
/// activations.
pub fn score_svd_with(w: &WeightMatrix, rank: usize, opts: SvdOptions) -> ScoreMatrix {
    let ps = truncated_svd_with(w, rank, opts);
    let recon = ps.reconstruction();
    let scores = (0..w.len())
        .map(|i| recon[(i / w.cols(), i % w.cols())].abs() as f32)
        .collect();
    let out = ScoreMatrix::new(w.name(), w.rows(), w.cols(), scores, Method::Svd);
    if opts.is_randomized(w) {
        out.with_seed(opts.seed)
    } else {
        out
    }
}
