use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, Method, ScoreMatrix};
use crate::io::WeightMatrix;

/// Uniform random baseline.
///
/// Scores are ranks of a seeded permutation of all positions: the first
/// position of the permutation scores `n`, the last scores `1`. Top-k is
/// therefore a uniform random k-subset, and the subset for a smaller budget
/// is a prefix of the subset for a larger one. The permutation depends only
/// on `seed` and the layer name.
///
/// Ranks are exact in `f32` for layers of up to 2^24 weights.
pub fn score_random(w: &WeightMatrix, seed: u64) -> ScoreMatrix {
    let n = w.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["random", w.name()]));
    perm.shuffle(&mut rng);

    let mut scores = vec![0.0f32; n];
    for (pos, &idx) in perm.iter().enumerate() {
        scores[idx] = (n - pos) as f32;
    }
    ScoreMatrix::new(w.name(), w.rows(), w.cols(), scores, Method::Random).with_seed(seed)
}
