//! Lloyd's K-means with k-means++ seeding and restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Extra run started from these labels (1-based); its result is a
    /// candidate alongside the random restarts.
    pub warm_start: Option<Vec<usize>>,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { restarts: 10, max_iter: 300, warm_start: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// 1-based cluster labels, one per point.
    pub labels: Vec<usize>,
    /// `K x d` centers; row `k - 1` is the center of cluster `k`.
    pub centers: DMatrix<f64>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

/// Clusters the rows of `points` into `k` groups with default options.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeans> {
    kmeans_with(points, k, seed, &KMeansOptions::default())
}

pub fn kmeans_with(points: &DMatrix<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeans> {
    let n = points.nrows();
    if k == 0 || k > n {
        return invalid(format!("K-means needs 1 <= K <= n, got K={k}, n={n}"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return invalid("K-means input has non-finite coordinates");
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| points.row(i).iter().copied().collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<KMeans> = None;
    if let Some(labels) = &opts.warm_start {
        if labels.len() == n && labels.iter().all(|&l| l >= 1 && l <= k) {
            let zero_based: Vec<usize> = labels.iter().map(|l| l - 1).collect();
            let centers = means(&rows, &zero_based, k);
            best = Some(lloyd(&rows, centers, opts.max_iter));
        }
    }
    for _ in 0..opts.restarts.max(1) {
        let centers = plus_plus(&rows, k, &mut rng);
        let run = lloyd(&rows, centers, opts.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        let c = centers.last().unwrap();
        for (d, p) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centers
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn means(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Moves, for each empty cluster, the point farthest from its own center
/// (taken from a cluster with more than one member) into the empty cluster.
fn fill_empty(rows: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..rows.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        let Some(i) = far else {
            return;
        };
        labels[i] = empty;
        dists[i] = 0.0;
    }
}

fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> KMeans {
    let k = centers.len();
    let n = rows.len();
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, p) in rows.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = d;
        }
        let before = labels.clone();
        fill_empty(rows, &mut labels, &mut dists, k);
        changed |= before != labels;
        centers = means(rows, &labels, k);
        if !changed {
            break;
        }
    }
    let inertia = rows.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    let d = rows[0].len();
    let flat: Vec<f64> = centers.into_iter().flatten().collect();
    KMeans {
        labels: labels.into_iter().map(|l| l + 1).collect(),
        centers: DMatrix::from_row_slice(k, d, &flat),
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn two_clouds(per: usize, gap: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        DMatrix::from_fn(2 * per, 2, |i, _| if i < per { 0.0 } else { gap } + noise.sample(&mut rng))
    }

    #[test]
    fn separated_clouds_split_perfectly() {
        let pts = two_clouds(20, 100.0, 1);
        let km = kmeans(&pts, 2, 7).unwrap();
        let first = km.labels[0];
        assert!(km.labels[..20].iter().all(|&l| l == first));
        assert!(km.labels[20..].iter().all(|&l| l != first));
    }

    #[test]
    fn single_cluster_is_mean() {
        let pts = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 3.0, 0.0, 0.0, 6.0]);
        let km = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(km.labels, vec![1, 1, 1]);
        assert!((km.centers[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((km.centers[(0, 1)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn best_restart_is_kept() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = DMatrix::from_fn(60, 3, |_, _| rng.random::<f64>());
        let best = kmeans(&pts, 4, 11).unwrap();
        // replay the same restarts the call consumed
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..60).map(|i| pts.row(i).iter().copied().collect()).collect();
        for _ in 0..10 {
            let run = lloyd(&rows, plus_plus(&rows, 4, &mut rng), 300);
            assert!(best.inertia <= run.inertia);
        }
    }

    #[test]
    fn no_empty_clusters_with_duplicates() {
        let pts = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]);
        let km = kmeans(&pts, 3, 5).unwrap();
        for c in 1..=3 {
            assert!(km.labels.contains(&c));
        }
    }

    #[test]
    fn warm_start_never_worse_than_its_seed() {
        let pts = two_clouds(10, 1.0, 4);
        let warm: Vec<usize> = (0..20).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
        let zero: Vec<usize> = warm.iter().map(|l| l - 1).collect();
        let rows: Vec<Vec<f64>> = (0..20).map(|i| pts.row(i).iter().copied().collect()).collect();
        let c = means(&rows, &zero, 2);
        let seed_cost: f64 = rows.iter().zip(&zero).map(|(p, &l)| sq_dist(p, &c[l])).sum();
        let km = kmeans_with(&pts, 2, 0, &KMeansOptions { restarts: 0, warm_start: Some(warm), ..Default::default() }).unwrap();
        assert!(km.inertia <= seed_cost);
    }

    #[test]
    fn rejects_k_above_n() {
        let pts = DMatrix::from_element(2, 2, 0.0);
        assert!(kmeans(&pts, 3, 0).is_err());
        assert!(kmeans(&pts, 0, 0).is_err());
    }
}
