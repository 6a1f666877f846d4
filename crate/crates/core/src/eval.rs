//! Evaluation metrics and the simulation benchmark harness.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{shp_detect, wptg_detect};
use crate::error::{invalid, Error, Result};
use crate::hypergraph::{phi, IndexSets};
use crate::linalg::derive_seed;
use crate::model::{link_prob, theta_unchecked, EmbeddingMatrix};
use crate::optimizer::{fit, FitConfig, Tunable};
use crate::synth::{generate, ScenarioParams, ThetaOracle};

/// Minimum-cost assignment on a square cost matrix (Hungarian algorithm with
/// potentials). Returns `assign[row] = column`.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let inf = f64::INFINITY;
    // 1-based internals; column 0 is a sentinel
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for col in 1..=k {
                if !used[col] {
                    let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=k {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; k];
    for col in 1..=k {
        if owner[col] > 0 {
            assign[owner[col] - 1] = col - 1;
        }
    }
    assign
}

/// Fraction of misclassified vertices, minimized over relabelings of `pred`.
///
/// Solved as a maximum-weight matching on the `K x K` confusion matrix.
pub fn hamming_error(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    if truth.len() != pred.len() {
        return invalid(format!("label vectors differ in length: {} vs {}", truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return invalid("label vectors are empty");
    }
    if let Some(bad) = truth.iter().chain(pred).find(|&&l| l < 1 || l > k) {
        return invalid(format!("label {bad} outside 1..={k}"));
    }
    let mut confusion = vec![vec![0.0; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[p - 1][t - 1] += 1.0;
    }
    let cost: Vec<Vec<f64>> = confusion.iter().map(|row| row.iter().map(|c| -c).collect()).collect();
    let assign = hungarian(&cost);
    let matched: f64 = assign.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum();
    Ok((truth.len() as f64 - matched) / truth.len() as f64)
}

/// Averaged Hellinger distance between the edge laws of two embeddings,
/// `sqrt(phi^-1 sum_S d^2(p_S, q_S))`, over all sets of size at most `m`.
pub fn hellinger_between(a: &EmbeddingMatrix, b: &EmbeddingMatrix, m: usize, s_n: f64) -> Result<f64> {
    if a.n() != b.n() {
        return invalid(format!("embeddings cover {} and {} vertices", a.n(), b.n()));
    }
    let n = a.n();
    let mut sets = IndexSets::new(n, m);
    let mut total = 0.0;
    while let Some(s) = sets.next_set() {
        let p = link_prob(theta_unchecked(a.as_matrix(), s), s_n);
        let q = link_prob(theta_unchecked(b.as_matrix(), s), s_n);
        total += bernoulli_hellinger_sq(p, q);
    }
    Ok((total / phi(n, m)? as f64).sqrt())
}

/// Hellinger distance between the fitted model and the truth.
pub fn hellinger(alpha_hat: &EmbeddingMatrix, truth: &ThetaOracle<'_>, m: usize) -> Result<f64> {
    hellinger_between(alpha_hat, truth.alpha(), m, truth.s_n())
}

pub(crate) fn bernoulli_hellinger_sq(p: f64, q: f64) -> f64 {
    let a = p.sqrt() - q.sqrt();
    let b = (1.0 - p).sqrt() - (1.0 - q).sqrt();
    a * a + b * b
}

/// Community detection methods available to the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hem,
    Wptg,
    Shp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hem => "hem",
            Method::Wptg => "wptg",
            Method::Shp => "shp",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hem" => Ok(Method::Hem),
            "wptg" => Ok(Method::Wptg),
            "shp" => Ok(Method::Shp),
            "tensor-score" | "tensorscore" | "tensor_score" => {
                Err(Error::InvalidArgument("method 'tensor-score' is not supported".into()))
            }
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}; expected hem, wptg or shp"))),
        }
    }
}

/// One grid cell of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub scenario: u8,
    pub n: usize,
    pub s_n: f64,
}

/// Settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub k: usize,
    pub m: usize,
    pub r: usize,
    /// Template for the embedding fit; `k`, `r`, `seed` and `s_n` are
    /// overwritten per replication (the generating `s_n` is used).
    pub hem: FitConfig,
}

impl BenchSettings {
    pub fn new(k: usize, m: usize, r: usize) -> Self {
        Self { k, m, r, hem: FitConfig::new(k, r) }
    }
}

/// Results of one method on one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: u8,
    pub n: usize,
    pub s_n: f64,
    pub method: Method,
    /// Per-replication errors; `None` marks a failed replication.
    pub errors: Vec<Option<f64>>,
    pub failures: Vec<String>,
    pub mean: f64,
    pub sd: f64,
    pub reps: usize,
    pub seconds: f64,
}

impl EvalReport {
    pub fn completed(&self) -> Vec<f64> {
        self.errors.iter().flatten().copied().collect()
    }
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs one detector and scores it against the planted labels.
fn run_method(method: Method, cell: &BenchCell, settings: &BenchSettings, seed: u64) -> Result<f64> {
    let params = ScenarioParams::new(cell.n, settings.k, settings.m, settings.r, cell.s_n, seed);
    let (h, truth) = generate(cell.scenario, params)?;
    let detect_seed = derive_seed(seed, 1);
    let labels = match method {
        Method::Hem => {
            let mut cfg = settings.hem.clone();
            cfg.k = settings.k;
            cfg.r = settings.r;
            cfg.seed = detect_seed;
            cfg.s_n = Tunable::Fixed(cell.s_n);
            fit(&h, &cfg)?.labels
        }
        Method::Wptg => wptg_detect(&h, settings.k, detect_seed)?,
        Method::Shp => shp_detect(&h, settings.k, detect_seed)?,
    };
    hamming_error(truth.labels_star.labels(), labels.labels(), settings.k)
}

/// Replication seed for `(cell, rep)`; identical across methods so every
/// method sees the same hypergraphs.
pub fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(master, cell as u64), rep as u64)
}

/// Generate, detect and score `reps` replications per cell and method.
///
/// Replications run in parallel; results are gathered in seed order, so
/// the output is a deterministic function of `seed`. A failing replication
/// is recorded, never fatal.
pub fn benchmark(grid: &[BenchCell], methods: &[Method], reps: usize, seed: u64, settings: &BenchSettings) -> Result<Vec<EvalReport>> {
    if reps == 0 {
        return invalid("at least one replication is required");
    }
    if methods.is_empty() {
        return invalid("no methods requested");
    }
    let mut reports = Vec::new();
    for (ci, cell) in grid.iter().enumerate() {
        let outcomes: Vec<Vec<(Result<f64>, f64)>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let s = replication_seed(seed, ci, rep);
                methods
                    .iter()
                    .map(|&method| {
                        let start = Instant::now();
                        let res = run_method(method, cell, settings, s);
                        (res, start.elapsed().as_secs_f64())
                    })
                    .collect()
            })
            .collect();
        for (mi, &method) in methods.iter().enumerate() {
            let mut errors = Vec::with_capacity(reps);
            let mut failures = Vec::new();
            let mut seconds = 0.0;
            for (rep, row) in outcomes.iter().enumerate() {
                let (res, secs) = &row[mi];
                seconds += secs;
                match res {
                    Ok(e) => errors.push(Some(*e)),
                    Err(err) => {
                        errors.push(None);
                        failures.push(format!("replication {rep}: {err}"));
                    }
                }
            }
            let done: Vec<f64> = errors.iter().flatten().copied().collect();
            let (mean, sd) = mean_sd(&done);
            reports.push(EvalReport { scenario: cell.scenario, n: cell.n, s_n: cell.s_n, method, errors, failures, mean, sd, reps, seconds });
        }
    }
    Ok(reports)
}

pub const CSV_HEADER: &str = "scenario,n,s_n,method,mean,sd,reps,seconds";

/// Machine-readable table, one row per cell and method, full precision.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{},{},{},{},{},{},{},{}", r.scenario, r.n, r.s_n, r.method.name(), r.mean, r.sd, r.reps, r.seconds);
    }
    out
}

pub fn reports_to_json(reports: &[EvalReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::Invariant(format!("serializing reports: {e}")))
}

/// Human-readable table with four decimals, `mean(sd)` per method. The
/// Tensor-SCORE column is always present and always `n/a`.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    let mut cells: Vec<(u8, usize, f64)> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
        let key = (r.scenario, r.n, r.s_n);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    let mut out = String::from("scenario  n     s_n     ");
    for m in &methods {
        let _ = write!(out, "{:<18}", m.name().to_uppercase());
    }
    out.push_str("TENSOR-SCORE\n");
    for (sc, n, s) in cells {
        let _ = write!(out, "{sc:<9} {n:<5} {s:<7} ");
        for m in &methods {
            let r = reports.iter().find(|r| r.scenario == sc && r.n == n && r.s_n == s && r.method == *m);
            let cell = r.map(|r| format!("{:.4}({:.4})", r.mean, r.sd)).unwrap_or_else(|| "-".into());
            let _ = write!(out, "{cell:<18}");
        }
        out.push_str("n/a\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn hamming_basic_cases() {
        assert_eq!(hamming_error(&[1, 1, 2, 2], &[1, 1, 2, 2], 2).unwrap(), 0.0);
        assert_eq!(hamming_error(&[1, 1, 2, 2], &[2, 2, 1, 1], 2).unwrap(), 0.0);
        assert_eq!(hamming_error(&[1, 1, 2, 2], &[1, 2, 2, 2], 2).unwrap(), 0.25);
        assert_eq!(hamming_error(&[1, 2, 3], &[3, 1, 2], 3).unwrap(), 0.0);
    }

    #[test]
    fn hamming_rejects_bad_input() {
        assert!(hamming_error(&[1, 2], &[1], 2).is_err());
        assert!(hamming_error(&[1, 3], &[1, 2], 2).is_err());
        assert!(hamming_error(&[0, 1], &[1, 2], 2).is_err());
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn hellinger_extremes() {
        let v = DMatrix::from_row_slice(3, 2, &[0.3, -0.2, 1.0, 0.5, -0.7, 0.1]);
        let a = EmbeddingMatrix::from_vertex_rows(&v).unwrap();
        assert_eq!(hellinger_between(&a, &a, 3, 0.4).unwrap(), 0.0);
        assert!((bernoulli_hellinger_sq(0.0, 1.0) - 2.0).abs() < 1e-15);
        let big = EmbeddingMatrix::from_vertex_rows(&DMatrix::from_element(3, 2, 40.0)).unwrap();
        let small = EmbeddingMatrix::from_vertex_rows(&DMatrix::from_element(3, 2, -40.0)).unwrap();
        let d = hellinger_between(&big, &small, 1, 1.0).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("HEM".parse::<Method>().unwrap(), Method::Hem);
        assert_eq!("wptg".parse::<Method>().unwrap(), Method::Wptg);
        let err = "tensor-score".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("not supported"));
        assert!("louvain".parse::<Method>().is_err());
    }

    #[test]
    fn mean_sd_conventions() {
        assert_eq!(mean_sd(&[0.3]), (0.3, 0.0));
        let (m, s) = mean_sd(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_rep_benchmark() {
        let grid = [BenchCell { scenario: 2, n: 20, s_n: 0.5 }];
        let mut settings = BenchSettings::new(2, 3, 3);
        settings.hem.max_outer = 5;
        let reports = benchmark(&grid, &[Method::Hem, Method::Wptg], 1, 3, &settings).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.sd, 0.0);
            assert_eq!(r.errors.len(), 1);
            assert!((0.0..=1.0).contains(&r.mean));
        }
        let again = benchmark(&grid, &[Method::Hem, Method::Wptg], 1, 3, &settings).unwrap();
        assert_eq!(reports.iter().map(|r| r.mean).collect::<Vec<_>>(), again.iter().map(|r| r.mean).collect::<Vec<_>>());
        let csv = reports_to_csv(&reports);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
        assert!(format_table(&reports).contains("n/a"));
    }

    #[test]
    fn failures_are_recorded() {
        // K above n makes every replication fail without aborting the grid
        let grid = [BenchCell { scenario: 1, n: 3, s_n: 0.5 }];
        let settings = BenchSettings::new(4, 2, 2);
        let reports = benchmark(&grid, &[Method::Wptg], 2, 0, &settings).unwrap();
        assert_eq!(reports[0].errors, vec![None, None]);
        assert_eq!(reports[0].failures.len(), 2);
        assert!(reports[0].mean.is_nan());
    }

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..k {
                let mut q = p.clone();
                q.insert(pos, k);
                out.push(q);
            }
        }
        out
    }

    fn exhaustive(truth: &[usize], pred: &[usize], k: usize) -> f64 {
        permutations(k)
            .iter()
            .map(|perm| truth.iter().zip(pred).filter(|&(&t, &p)| perm[p - 1] != t).count())
            .min()
            .unwrap() as f64
            / truth.len() as f64
    }

    #[test]
    fn matching_equals_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = rng.random_range(1..=6);
            let truth: Vec<usize> = (0..50).map(|_| rng.random_range(1..=k)).collect();
            let pred: Vec<usize> = truth
                .iter()
                .map(|&t| if rng.random_bool(0.6) { t } else { rng.random_range(1..=k) })
                .collect();
            let got = hamming_error(&truth, &pred, k).unwrap();
            assert!((got - exhaustive(&truth, &pred, k)).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&got));
        }
    }

    #[test]
    fn hamming_ignores_label_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = 5;
        let truth: Vec<usize> = (0..40).map(|_| rng.random_range(1..=k)).collect();
        let pred: Vec<usize> = (0..40).map(|_| rng.random_range(1..=k)).collect();
        let base = hamming_error(&truth, &pred, k).unwrap();
        for perm in permutations(k).iter().step_by(7) {
            let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p - 1]).collect();
            assert_eq!(hamming_error(&truth, &relabeled, k).unwrap(), base);
            assert_eq!(hamming_error(&relabeled, &truth, k).unwrap(), base);
        }
        assert_eq!(hamming_error(&truth, &truth, k).unwrap(), 0.0);
    }

    #[test]
    fn hellinger_against_explicit_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = EmbeddingMatrix::from_vertex_rows(&DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let b = EmbeddingMatrix::from_vertex_rows(&DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        // subsets of {1..5} with 1 to 4 elements: 5 + 10 + 10 + 5
        let mut total = 0.0;
        let mut count = 0;
        for mask in 1u32..32 {
            if mask.count_ones() > 4 {
                continue;
            }
            let set: Vec<usize> = (1..=5).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let p = link_prob(crate::model::theta(&a, &set).unwrap(), 0.3);
            let q = link_prob(crate::model::theta(&b, &set).unwrap(), 0.3);
            let h2 = (p.sqrt() - q.sqrt()).powi(2) + ((1.0 - p).sqrt() - (1.0 - q).sqrt()).powi(2);
            total += h2;
            count += 1;
        }
        assert_eq!(count, 30);
        let want = (total / count as f64).sqrt();
        let got = hellinger_between(&a, &b, 4, 0.3).unwrap();
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        assert!((hellinger_between(&b, &a, 4, 0.3).unwrap() - got).abs() < 1e-15);
    }
}
