//! HOSVD-style initialization from the mode-1 unfolding of the augmented
//! adjacency tensor.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::hypergraph::Hypergraph;
use crate::linalg::sorted_eigen;
use crate::model::EmbeddingMatrix;

const NOISE_STD: f64 = 1e-3;

/// Gram matrix `M M^T` of the mode-1 unfolding `M` of the augmented
/// adjacency tensor, `(n+1) x (n+1)` with the null vertex last.
///
/// Two tensor entries in rows `u` and `v` share a column exactly when the
/// augmented edges agree after removing one copy of `u` and of `v`
/// respectively; the shared column count is the number of distinct
/// orderings of that remaining multiset.
pub fn unfolding_gram(h: &Hypergraph) -> DMatrix<f64> {
    let (n, m) = (h.n(), h.m());
    let null = n + 1;
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }

    let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for e in h.edges() {
        let mut tuple = e.clone();
        tuple.resize(m, null);
        let mut prev = None;
        for pos in 0..m {
            let u = tuple[pos];
            if prev == Some(u) {
                continue;
            }
            prev = Some(u);
            let mut key = tuple.clone();
            key.remove(pos);
            groups.entry(key).or_default().push(u);
        }
    }

    let mut gram = DMatrix::zeros(n + 1, n + 1);
    let mut keys: Vec<_> = groups.into_iter().collect();
    keys.sort_unstable();
    for (key, members) in keys {
        let nulls = key.iter().filter(|&&i| i == null).count();
        let orderings = fact[m - 1] / fact[nulls];
        for &u in &members {
            for &v in &members {
                gram[(u - 1, v - 1)] += orderings;
            }
        }
    }
    gram
}

/// Top-`r` eigenvectors of the unfolding Gram matrix, column `j` scaled by
/// `sigma_j^(1/m)` where `sigma_j = sqrt(lambda_j)` is the matching singular
/// value of the unfolding, with the null row overwritten by ones.
///
/// Columns without a positive eigenvalue are filled with seeded Gaussian
/// noise of standard deviation `1e-3`.
pub fn hosvd_init(h: &Hypergraph, r: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let n = h.n();
    if r == 0 || r > n {
        return invalid(format!("embedding dimension must satisfy 1 <= r <= n, got r={r}, n={n}"));
    }
    let (values, vectors) = sorted_eigen(unfolding_gram(h));
    let tol = 1e-10 * values.first().copied().unwrap_or(0.0).max(1.0);
    let exponent = 0.5 / h.m() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_STD).expect("valid normal");

    let mut rows = DMatrix::zeros(n + 1, r);
    let mut padded = 0;
    for j in 0..r {
        if values[j] > tol {
            let scale = values[j].powf(exponent);
            for i in 0..=n {
                rows[(i, j)] = vectors[(i, j)] * scale;
            }
        } else {
            padded += 1;
            for i in 0..=n {
                rows[(i, j)] = noise.sample(&mut rng);
            }
        }
    }
    if padded > 0 {
        log::warn!("unfolding has rank below {r}; {padded} initial columns drawn as noise");
    }
    rows.row_mut(n).fill(1.0);
    EmbeddingMatrix::new(rows)
}
