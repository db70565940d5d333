//! Reference implementations used only by tests. Each one is written from
//! scratch with plain loops so it shares no code path with the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use salient_quant::io::{CalibrationBatch, WeightMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(name: &str, rows: usize, cols: usize, seed: u64) -> WeightMatrix {
    let mut r = rng(seed);
    WeightMatrix::from_fn(name, rows, cols, |_, _| r.sample::<f32, _>(StandardNormal)).unwrap()
}

pub fn gaussian_batch(layer: &str, samples: usize, features: usize, seed: u64) -> CalibrationBatch {
    let mut r = rng(seed);
    let data = (0..samples * features)
        .map(|_| r.sample::<f32, _>(StandardNormal))
        .collect();
    CalibrationBatch::new(layer, samples, features, data).unwrap()
}

/// Row-major dense f64 matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn from_weights(w: &WeightMatrix) -> Self {
        Dense {
            rows: w.rows(),
            cols: w.cols(),
            a: w.data().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    pub fn transpose(&self) -> Dense {
        let mut t = vec![0.0; self.a.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[c * self.rows + r] = self.at(r, c);
            }
        }
        Dense {
            rows: self.cols,
            cols: self.rows,
            a: t,
        }
    }
}

/// One-sided Jacobi SVD. Returns singular values (descending) and the
/// rank-`r` reconstruction as a row-major `rows × cols` matrix.
pub fn jacobi_svd(m: &Dense, r: usize) -> (Vec<f64>, Dense) {
    if m.rows < m.cols {
        let (s, recon) = jacobi_svd(&m.transpose(), r);
        return (s, recon.transpose());
    }
    let (rows, n) = (m.rows, m.cols);
    // column-major working copies: a[j] is column j of A, v[j] column j of V
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| (0..rows).map(|i| m.at(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = a[i].iter().map(|x| x * x).sum();
                let beta: f64 = a[j].iter().map(|x| x * x).sum();
                let gamma: f64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let (x, y) = (a[i][k], a[j][k]);
                    a[i][k] = c * x - s * y;
                    a[j][k] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[i][k], v[j][k]);
                    v[i][k] = c * x - s * y;
                    v[j][k] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let sing: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    // A·V = U·Σ, so the rank-r part is Σ_{top r} a_j v_jᵀ
    let mut recon = vec![0.0; rows * n];
    for &j in order.iter().take(r) {
        for row in 0..rows {
            for col in 0..n {
                recon[row * n + col] += a[j][row] * v[j][col];
            }
        }
    }
    (
        sing,
        Dense {
            rows,
            cols: n,
            a: recon,
        },
    )
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(m: &Dense) -> Dense {
    let n = m.rows;
    assert_eq!(n, m.cols);
    let mut aug = vec![vec![0.0; 2 * n]; n];
    for (i, row) in aug.iter_mut().enumerate() {
        for j in 0..n {
            row[j] = m.at(i, j);
        }
        row[n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().partial_cmp(&aug[y][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p.abs() > 1e-300, "singular");
        for x in aug[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    Dense {
        rows: n,
        cols: n,
        a: aug.iter().flat_map(|row| row[n..].to_vec()).collect(),
    }
}

/// `(2/N) Σ_s x_s x_sᵀ`, accumulated sample by sample.
pub fn hessian_by_outer_products(x: &CalibrationBatch) -> Dense {
    let d = x.features();
    let mut h = vec![0.0; d * d];
    for s in 0..x.samples() {
        for i in 0..d {
            let xi = x.get(s, i) as f64;
            for j in 0..d {
                h[i * d + j] += xi * x.get(s, j) as f64;
            }
        }
    }
    let f = 2.0 / x.samples() as f64;
    Dense {
        rows: d,
        cols: d,
        a: h.into_iter().map(|v| v * f).collect(),
    }
}

/// Random SPD matrix `B Bᵀ + d·I`-free: `B Bᵀ / d + 0.1 I`.
pub fn random_spd(d: usize, seed: u64) -> Dense {
    let mut r = rng(seed);
    let b: Vec<f64> = (0..d * d).map(|_| r.sample(StandardNormal)).collect();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += b[i * d + k] * b[j * d + k];
            }
            a[i * d + j] = s / d as f64 + if i == j { 0.1 } else { 0.0 };
        }
    }
    Dense { rows: d, cols: d, a }
}

/// Indices of the `k` largest values, ties to the lower index, sorted.
pub fn brute_top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub fn flat(indices: &[(usize, usize)], cols: usize) -> Vec<usize> {
    indices.iter().map(|&(r, c)| r * cols + c).collect()
}
