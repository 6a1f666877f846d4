//! Community detection in general (uniform or non-uniform) hypergraphs.
//!
//! Hyperedges of cardinality below the range `m` are padded with a null vertex
//! so the hypergraph becomes an `m`-uniform multi-hypergraph. Each vertex is
//! embedded as a row of an `(n+1) x r` matrix `alpha` (the null row is pinned
//! to ones), and the logit-like transform of every edge probability is the
//! symmetric CP form
//!
//! ```text
//! theta_S = sum_j prod_{i in S} alpha_ij,      p_S = s_n / (1 + exp(-theta_S))
//! ```
//!
//! The embedding is fitted by gradient descent on a penalized Bernoulli
//! likelihood whose second penalty pulls rows towards K-means centers; the
//! final K-means labels are the detected communities.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`hypergraph`] | data model, `.hg` IO, augmentation, subset enumeration |
//! | [`model`] | embedding matrix, likelihood, penalties, analytic gradient |
//! | [`optimizer`] | HOSVD initialization, K-means, alternating fit |
//! | [`synth`] | planted-partition generators |
//! | [`baselines`] | weighted projection and hypergraph Laplacian spectral clustering |
//! | [`eval`] | Hamming error, Hellinger distance, benchmark harness |

pub mod baselines;
pub mod error;
pub mod eval;
pub mod hypergraph;
pub mod model;
pub mod optimizer;
pub mod synth;

mod linalg;

pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, IngestOptions};
pub use model::{EmbeddingMatrix, Execution, ModelParams};
pub use optimizer::{fit, CommunityAssignment, FitConfig, FitResult, Tunable};
