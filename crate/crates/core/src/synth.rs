//! Planted-community generators.
//!
//! Scenario 1 draws every vertex embedding around its community mean;
//! scenario 2 gives every vertex of a community the same embedding row (a
//! hypergraph stochastic block model). Both sample each candidate set
//! independently with `p_S = s_n * logistic(theta_S)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypergraph::{Hypergraph, IndexSets};
use crate::model::{link_prob, theta_unchecked, EmbeddingMatrix};
use crate::optimizer::CommunityAssignment;

const EMBED_SD: f64 = 0.5;
const SCENARIO1_MEAN_SD: f64 = 0.5;
const SCENARIO2_MEAN_SD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub r: usize,
    pub s_n: f64,
    pub seed: u64,
}

impl ScenarioParams {
    pub fn new(n: usize, k: usize, m: usize, r: usize, s_n: f64, seed: u64) -> Self {
        Self { n, k, m, r, s_n, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if self.k == 0 || self.k > self.n {
            return invalid(format!("need 1 <= K <= n, got K={}", self.k));
        }
        if self.m < 2 {
            return invalid(format!("range m must be at least 2, got {}", self.m));
        }
        if self.r < 1 {
            return invalid("embedding dimension must be positive");
        }
        if !(self.s_n > 0.0 && self.s_n <= 1.0) {
            return invalid(format!("sparsity factor must lie in (0, 1], got {}", self.s_n));
        }
        Ok(())
    }
}

/// How scenario 2's CP tensor is turned into edge probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbabilityReading {
    /// The tensor holds `theta`; `p = s_n * logistic(theta)`.
    #[default]
    Logit,
    /// The tensor holds probabilities directly, clipped to `[0, 1]`.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    pub alpha_star: EmbeddingMatrix,
    pub labels_star: CommunityAssignment,
    pub scenario: u8,
    pub params: ScenarioParams,
    /// `(K+1) x r` centers for scenario 2, last row ones.
    pub centers_star: Option<DMatrix<f64>>,
    pub reading: ProbabilityReading,
}

impl SyntheticTruth {
    pub fn theta_oracle(&self) -> ThetaOracle<'_> {
        ThetaOracle { alpha: &self.alpha_star, s_n: self.params.s_n, reading: self.reading }
    }
}

/// Evaluates the true `theta_S` and `p_S` on demand.
#[derive(Debug, Clone, Copy)]
pub struct ThetaOracle<'a> {
    alpha: &'a EmbeddingMatrix,
    s_n: f64,
    reading: ProbabilityReading,
}

impl<'a> ThetaOracle<'a> {
    pub fn new(alpha: &'a EmbeddingMatrix, s_n: f64) -> Self {
        Self { alpha, s_n, reading: ProbabilityReading::Logit }
    }

    pub fn alpha(&self) -> &'a EmbeddingMatrix {
        self.alpha
    }

    pub fn s_n(&self) -> f64 {
        self.s_n
    }

    /// `theta_S` for a sorted 1-based vertex set (unchecked range).
    pub fn theta(&self, s: &[usize]) -> f64 {
        theta_unchecked(self.alpha.as_matrix(), s)
    }

    pub fn prob(&self, s: &[usize]) -> f64 {
        let t = self.theta(s);
        match self.reading {
            ProbabilityReading::Logit => link_prob(t, self.s_n),
            ProbabilityReading::Literal => t.clamp(0.0, 1.0),
        }
    }

    /// Mean and variance of the edge count, `sum p_S` and `sum p_S (1 - p_S)`.
    pub fn edge_count_moments(&self, m: usize) -> (f64, f64) {
        let mut sets = IndexSets::new(self.alpha.n(), m);
        let (mut mean, mut var) = (0.0, 0.0);
        while let Some(s) = sets.next_set() {
            let p = self.prob(s);
            mean += p;
            var += p * (1.0 - p);
        }
        (mean, var)
    }
}

/// Community `floor((i-1)K/n) + 1` for the vertex at permuted position `i`.
fn balanced_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut labels = vec![0; n];
    for (pos, &v) in perm.iter().enumerate() {
        labels[v] = pos * k / n + 1;
    }
    (perm, labels)
}

fn sample_edges(oracle: &ThetaOracle<'_>, n: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Hypergraph> {
    let mut edges = Vec::new();
    let mut sets = IndexSets::new(n, m);
    while let Some(s) = sets.next_set() {
        let u: f64 = rng.random();
        if u < oracle.prob(s) {
            edges.push(s.to_vec());
        }
    }
    Hypergraph::new(n, m, edges)
}

/// Scenario 1: vertex embeddings scattered around per-community means.
pub fn generate_scenario1(params: ScenarioParams) -> Result<(Hypergraph, SyntheticTruth)> {
    params.validate()?;
    let ScenarioParams { n, k, m, r, .. } = params;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mean_dist = Normal::new(0.0, SCENARIO1_MEAN_SD).expect("valid normal");
    let means: Vec<f64> = (0..k).map(|_| mean_dist.sample(&mut rng)).collect();
    let (perm, labels) = balanced_labels(n, k, &mut rng);

    let noise = Normal::new(0.0, EMBED_SD).expect("valid normal");
    let mut rows = DMatrix::zeros(n, r);
    for &v in &perm {
        let mu = means[labels[v] - 1];
        for j in 0..r {
            rows[(v, j)] = mu + noise.sample(&mut rng);
        }
    }
    let alpha_star = EmbeddingMatrix::from_vertex_rows(&rows)?;
    let truth = SyntheticTruth {
        alpha_star,
        labels_star: CommunityAssignment::new(labels, k)?,
        scenario: 1,
        params,
        centers_star: None,
        reading: ProbabilityReading::Logit,
    };
    let h = sample_edges(&truth.theta_oracle(), n, m, &mut rng)?;
    Ok((h, truth))
}

/// Scenario 2: all vertices of a community share their center's embedding.
pub fn generate_scenario2(params: ScenarioParams) -> Result<(Hypergraph, SyntheticTruth)> {
    generate_scenario2_with(params, ProbabilityReading::Logit)
}

pub fn generate_scenario2_with(params: ScenarioParams, reading: ProbabilityReading) -> Result<(Hypergraph, SyntheticTruth)> {
    params.validate()?;
    let ScenarioParams { n, k, m, r, .. } = params;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (_, labels) = balanced_labels(n, k, &mut rng);

    let mean_dist = Normal::new(0.0, SCENARIO2_MEAN_SD).expect("valid normal");
    let noise = Normal::new(0.0, EMBED_SD).expect("valid normal");
    let mut centers = DMatrix::from_element(k + 1, r, 1.0);
    for c in 0..k {
        let mu = mean_dist.sample(&mut rng);
        for j in 0..r {
            centers[(c, j)] = mu + noise.sample(&mut rng);
        }
    }
    let labels = CommunityAssignment::new(labels, k)?;
    let alpha = labels.membership_matrix() * &centers;
    let truth = SyntheticTruth {
        alpha_star: EmbeddingMatrix::new(alpha)?,
        labels_star: labels,
        scenario: 2,
        params,
        centers_star: Some(centers),
        reading,
    };
    let h = sample_edges(&truth.theta_oracle(), n, m, &mut rng)?;
    Ok((h, truth))
}

/// Dispatches on the scenario number.
pub fn generate(scenario: u8, params: ScenarioParams) -> Result<(Hypergraph, SyntheticTruth)> {
    match scenario {
        1 => generate_scenario1(params),
        2 => generate_scenario2(params),
        other => invalid(format!("unknown scenario {other}; expected 1 or 2")),
    }
}
