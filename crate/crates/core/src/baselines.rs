//! Matrix-projection baselines: weighted projection to a graph (WPTG) and
//! spectral hypergraph partitioning with the normalized incidence Laplacian
//! (SHP). Both finish with normalized spectral clustering.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::hypergraph::Hypergraph;
use crate::linalg::sorted_eigen;
use crate::optimizer::{kmeans, CommunityAssignment};

/// Symmetric, non-negative, zero-diagonal weighted adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Weight between 1-based vertices.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[(u - 1, v - 1)]
    }
}

/// Clique expansion with weight `1/(|e|-1)` per pair in each edge.
pub fn wptg_projection(h: &Hypergraph) -> WeightedGraph {
    let n = h.n();
    let mut w = DMatrix::zeros(n, n);
    for e in h.edges().iter().filter(|e| e.len() >= 2) {
        let share = 1.0 / (e.len() - 1) as f64;
        for (a, &u) in e.iter().enumerate() {
            for &v in &e[a + 1..] {
                w[(u - 1, v - 1)] += share;
                w[(v - 1, u - 1)] += share;
            }
        }
    }
    debug_assert!(is_symmetric(&w));
    WeightedGraph { weights: w }
}

/// `D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}`; rows of zero-degree vertices are zero.
fn shp_operator(h: &Hypergraph) -> DMatrix<f64> {
    let n = h.n();
    let deg = h.degrees();
    let mut theta = DMatrix::zeros(n, n);
    for e in h.edges() {
        let inv = 1.0 / e.len() as f64;
        for &u in e {
            for &v in e {
                theta[(u - 1, v - 1)] += inv;
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            if deg[u] == 0 || deg[v] == 0 {
                theta[(u, v)] = 0.0;
            } else {
                theta[(u, v)] /= ((deg[u] * deg[v]) as f64).sqrt();
            }
        }
    }
    theta
}

/// Normalized hypergraph Laplacian `I - D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}`.
pub fn shp_laplacian(h: &Hypergraph) -> DMatrix<f64> {
    DMatrix::identity(h.n(), h.n()) - shp_operator(h)
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= 1e-12 * scale
}

/// Spectral clustering on a normalized affinity operator `A` (the Laplacian
/// is `I - A`): top-`k` eigenvectors of `A`, row-normalized, then K-means.
/// Vertices flagged `isolated` are left out and joined to the center
/// nearest the origin (ties go to the lowest label).
fn spectral_labels(affinity: DMatrix<f64>, isolated: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = affinity.nrows();
    let active: Vec<usize> = (0..n).filter(|&i| !isolated[i]).collect();
    if active.len() < k {
        log::warn!("only {} connected vertices for {k} communities; assigning community 1", active.len());
        return Ok(vec![1; n]);
    }
    let (_, vecs) = sorted_eigen(affinity);
    let mut emb = DMatrix::zeros(active.len(), k);
    for (row, &i) in active.iter().enumerate() {
        for j in 0..k {
            emb[(row, j)] = vecs[(i, j)];
        }
        let norm = emb.row(row).norm();
        if norm > 0.0 {
            emb.row_mut(row).unscale_mut(norm);
        }
    }
    let km = kmeans(&emb, k, seed)?;
    let origin_label = (0..k)
        .map(|c| (c + 1, km.centers.row(c).norm_squared()))
        .fold((1, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut labels = vec![origin_label; n];
    for (row, &i) in active.iter().enumerate() {
        labels[i] = km.labels[row];
    }
    Ok(labels)
}

/// Weighted projection to a graph, then normalized spectral clustering.
pub fn wptg_detect(h: &Hypergraph, k: usize, seed: u64) -> Result<CommunityAssignment> {
    if k < 2 || k > h.n() {
        return invalid(format!("need 2 <= K <= n, got K={k}"));
    }
    let w = wptg_projection(h).weights;
    let n = h.n();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let isolated: Vec<bool> = deg.iter().map(|&d| d <= 0.0).collect();
    let affinity = DMatrix::from_fn(n, n, |u, v| {
        if isolated[u] || isolated[v] {
            0.0
        } else {
            w[(u, v)] / (deg[u] * deg[v]).sqrt()
        }
    });
    CommunityAssignment::new(spectral_labels(affinity, &isolated, k, seed)?, k)
}

/// Spectral hypergraph partitioning on the normalized incidence Laplacian.
pub fn shp_detect(h: &Hypergraph, k: usize, seed: u64) -> Result<CommunityAssignment> {
    if k < 2 || k > h.n() {
        return invalid(format!("need 2 <= K <= n, got K={k}"));
    }
    let op = shp_operator(h);
    debug_assert!(is_symmetric(&op));
    let isolated: Vec<bool> = h.degrees().iter().map(|&d| d == 0).collect();
    CommunityAssignment::new(spectral_labels(op, &isolated, k, seed)?, k)
}
