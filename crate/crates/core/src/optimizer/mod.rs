//! Alternating fit: a gradient step on the embedding with overshoot
//! halving, then K-means on the vertex rows to refresh the community
//! centers that the second penalty pulls towards.

mod hosvd;
mod kmeans;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypergraph::{estimate_sparsity, Hypergraph};
use crate::model::{check_inputs, data_term, full_gradient, penalty, EmbeddingMatrix, Execution, ModelParams};

pub use hosvd::{hosvd_init, unfolding_gram};
pub use kmeans::{kmeans, kmeans_with, KMeans, KMeansOptions};

/// Maximum number of learning-rate halvings within one step.
pub const MAX_HALVINGS: usize = 30;

/// Vertex-to-community labels in `1..=K`; entry `i - 1` is the label of vertex `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl CommunityAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("number of communities must be positive");
        }
        if let Some(bad) = labels.iter().find(|&&l| l < 1 || l > k) {
            return invalid(format!("label {bad} outside 1..={k}"));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(n+1) x (K+1)` membership matrix; the null vertex sits alone in column `K+1`.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        let n = self.labels.len();
        let mut z = DMatrix::zeros(n + 1, self.k + 1);
        for (i, &l) in self.labels.iter().enumerate() {
            z[(i, l - 1)] = 1.0;
        }
        z[(n, self.k)] = 1.0;
        z
    }
}

/// A tuning value that is either derived from the data or given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tunable {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Tunable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Tunable::Auto);
        }
        s.parse::<f64>()
            .map(Tunable::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("expected 'auto' or a number, got {s:?}")))
    }
}

/// Default `lambda0 = 1e-6 * n^((1-m)/2)`.
pub fn default_lambda0(n: usize, m: usize) -> f64 {
    1e-6 * (n as f64).powf((1.0 - m as f64) / 2.0)
}

/// Default `lambda1 = 1e-6 * sqrt(n) * ln(n)`.
pub fn default_lambda1(n: usize) -> f64 {
    let n = n as f64;
    1e-6 * n.sqrt() * n.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub r: usize,
    pub s_n: Tunable,
    pub lambda0: Tunable,
    pub lambda1: Tunable,
    /// Initial learning rate; `Auto` is `n / s_n`.
    pub eta0: Tunable,
    pub tol: f64,
    pub max_outer: usize,
    pub seed: u64,
    /// Optional cap on vertex-row norms, enforced by projection after each step.
    pub c0: Option<f64>,
    pub kmeans_restarts: usize,
    pub execution: Execution,
}

impl FitConfig {
    pub fn new(k: usize, r: usize) -> Self {
        Self {
            k,
            r,
            s_n: Tunable::Auto,
            lambda0: Tunable::Auto,
            lambda1: Tunable::Auto,
            eta0: Tunable::Auto,
            tol: 1e-6,
            max_outer: 500,
            seed: 0,
            c0: None,
            kmeans_restarts: 10,
            execution: Execution::Serial,
        }
    }

    /// Expands `Auto` values against `h` and validates everything.
    pub fn resolve(&self, h: &Hypergraph) -> Result<ModelParams> {
        let n = h.n();
        if self.k < 2 || self.k > n {
            return invalid(format!("need 2 <= K <= n, got K={}, n={n}", self.k));
        }
        if self.r < 1 || self.r > n {
            return invalid(format!("need 1 <= r <= n, got r={}, n={n}", self.r));
        }
        if let Tunable::Fixed(eta) = self.eta0 {
            if !(eta > 0.0 && eta.is_finite()) {
                return invalid(format!("initial learning rate must be positive, got {eta}"));
            }
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.c0.is_some_and(|c| !(c > 0.0)) {
            return invalid("row-norm cap must be positive");
        }
        let s_n = match self.s_n {
            Tunable::Auto => estimate_sparsity(h)?,
            Tunable::Fixed(v) => v,
        };
        let lambda0 = match self.lambda0 {
            Tunable::Auto => default_lambda0(n, h.m()),
            Tunable::Fixed(v) => v,
        };
        let lambda1 = match self.lambda1 {
            Tunable::Auto => default_lambda1(n),
            Tunable::Fixed(v) => v,
        };
        ModelParams::new(s_n, lambda0, lambda1)
    }

    /// Initial learning rate for `n` vertices at sparsity `s_n`.
    pub fn initial_eta(&self, n: usize, s_n: f64) -> f64 {
        match self.eta0 {
            Tunable::Auto => default_eta0(n, s_n),
            Tunable::Fixed(v) => v,
        }
    }
}

/// Default initial learning rate `n / s_n`. The likelihood term is an
/// average over all candidate sets, so its curvature in one vertex row is
/// of order `s_n / n`.
pub fn default_eta0(n: usize, s_n: f64) -> f64 {
    n as f64 / s_n
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub alpha_hat: EmbeddingMatrix,
    /// The HOSVD starting point.
    pub alpha_init: EmbeddingMatrix,
    pub labels: CommunityAssignment,
    /// `(K+1) x r` centers; the last row is the null-vertex center (ones).
    pub centers: DMatrix<f64>,
    /// Objective after each K-means step; entry 0 is the initialization.
    pub loss_trace: Vec<f64>,
    /// Learning rate in effect after each outer iteration; entry 0 is the initial rate.
    pub eta_trace: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
    pub final_eta: f64,
    pub params: ModelParams,
}

/// `Y = Z C`: each vertex row is its center, the null row is ones.
fn center_matrix(km: &KMeans, r: usize) -> DMatrix<f64> {
    let n = km.labels.len();
    let mut y = DMatrix::from_element(n + 1, r, 1.0);
    for (i, &l) in km.labels.iter().enumerate() {
        y.row_mut(i).copy_from(&km.centers.row(l - 1));
    }
    y
}

fn full_centers(km: &KMeans) -> DMatrix<f64> {
    let (k, r) = km.centers.shape();
    let mut c = DMatrix::from_element(k + 1, r, 1.0);
    c.rows_mut(0, k).copy_from(&km.centers);
    c
}

fn not_finite(iteration: usize, what: &str) -> Error {
    Error::Numeric { iteration, message: format!("{what} is not finite") }
}

/// Fits the embedding and community labels.
pub fn fit(h: &Hypergraph, config: &FitConfig) -> Result<FitResult> {
    let params = config.resolve(h)?;
    let exec = config.execution;
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);

    let mut alpha = hosvd_init(h, config.r, seeds.next_u64())?;
    if let Some(c0) = config.c0 {
        alpha.project_rows(c0);
    }
    let km_opts = |warm: Option<Vec<usize>>| KMeansOptions { restarts: config.kmeans_restarts, warm_start: warm, ..Default::default() };
    let mut km = kmeans_with(&alpha.vertex_rows(), config.k, seeds.next_u64(), &km_opts(None))?;
    let mut y = center_matrix(&km, config.r);
    check_inputs(&alpha, h, &params, &y)?;
    let alpha_init = alpha.clone();

    let mut data = data_term(&alpha, h, params.s_n, true, exec)?;
    let mut current = data.loss + penalty(&alpha, &params, &y)?;
    if !current.is_finite() {
        return Err(not_finite(0, "initial objective"));
    }

    let mut eta = config.initial_eta(h.n(), params.s_n);
    let mut loss_trace = vec![current];
    let mut eta_trace = vec![eta];
    let mut converged = false;
    let mut iters = 0;

    while iters < config.max_outer {
        iters += 1;
        let grad = full_gradient(&alpha, &params, &y, data.grad.clone().expect("gradient kept"));
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(not_finite(iters, "gradient"));
        }

        for _ in 0..=MAX_HALVINGS {
            let mut candidate = alpha.descend(&grad, eta);
            if let Some(c0) = config.c0 {
                candidate.project_rows(c0);
            }
            if candidate.is_finite() {
                let trial = data_term(&candidate, h, params.s_n, true, exec)?;
                let value = trial.loss + penalty(&candidate, &params, &y)?;
                if value.is_finite() && value <= current {
                    alpha = candidate;
                    data = trial;
                    break;
                }
            }
            // overshoot: the reduced rate carries over to later iterations
            eta *= 0.5;
        }

        km = kmeans_with(&alpha.vertex_rows(), config.k, seeds.next_u64(), &km_opts(Some(km.labels.clone())))?;
        y = center_matrix(&km, config.r);
        let next = data.loss + penalty(&alpha, &params, &y)?;
        if !next.is_finite() {
            return Err(not_finite(iters, "objective"));
        }

        loss_trace.push(next);
        eta_trace.push(eta);
        let change = (next - current).abs() / current.abs().max(1.0);
        current = next;
        if change < config.tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        alpha_hat: alpha,
        alpha_init,
        labels: CommunityAssignment::new(km.labels.clone(), config.k)?,
        centers: full_centers(&km),
        loss_trace,
        eta_trace,
        outer_iters: iters,
        converged,
        final_eta: eta,
        params,
    })
}
