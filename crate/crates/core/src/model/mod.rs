//! The embedding model: symmetric CP evaluation of `theta`, the
//! sparsity-scaled logistic link, the Bernoulli loss, both penalties and the
//! analytic gradient of the penalized objective.

mod likelihood;

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

pub use likelihood::{gradient, objective, objective_and_gradient, objective_with};
pub(crate) use likelihood::{check_inputs, data_term, full_gradient, penalty};

/// How the subset sums are evaluated.
///
/// Both modes split the work into the same fixed chunks and reduce them in
/// the same order, so they produce bitwise-identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// `(n+1) x r` embedding whose last row (the null vertex) is all ones.
///
/// Row `i - 1` of the underlying matrix is the embedding of vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: DMatrix<f64>,
}

impl EmbeddingMatrix {
    /// Wraps a full `(n+1) x r` matrix; the last row must be exactly ones.
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() < 2 || rows.ncols() < 1 {
            return invalid(format!("embedding must be at least 2 x 1, got {}x{}", rows.nrows(), rows.ncols()));
        }
        let last = rows.nrows() - 1;
        if rows.row(last).iter().any(|&v| v != 1.0) {
            return Err(Error::Validation("null-vertex row must be all ones".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("embedding has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    /// Builds from the `n x r` block of real vertices and appends the null row.
    pub fn from_vertex_rows(vertices: &DMatrix<f64>) -> Result<Self> {
        let (n, r) = vertices.shape();
        let mut rows = DMatrix::from_element(n + 1, r, 1.0);
        rows.rows_mut(0, n).copy_from(vertices);
        Self::new(rows)
    }

    /// All real-vertex rows zero.
    pub fn zeros(n: usize, r: usize) -> Self {
        let mut rows = DMatrix::zeros(n + 1, r);
        rows.row_mut(n).fill(1.0);
        Self { rows }
    }

    /// Number of real vertices.
    pub fn n(&self) -> usize {
        self.rows.nrows() - 1
    }

    /// Embedding dimension.
    pub fn r(&self) -> usize {
        self.rows.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Copy of the first `n` rows.
    pub fn vertex_rows(&self) -> DMatrix<f64> {
        self.rows.rows(0, self.n()).into_owned()
    }

    /// Entry for 1-based vertex `i` (null vertex included) and 0-based column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[(i - 1, j)]
    }

    /// `alpha[0..n] -= step * direction`; the null row is untouched.
    pub fn descend(&self, direction: &DMatrix<f64>, step: f64) -> Self {
        let mut rows = self.rows.clone();
        let n = self.n();
        for j in 0..self.r() {
            for i in 0..n {
                rows[(i, j)] -= step * direction[(i, j)];
            }
        }
        Self { rows }
    }

    /// Scales every real-vertex row with Euclidean norm above `c0` back onto the ball.
    pub fn project_rows(&mut self, c0: f64) {
        let n = self.n();
        for i in 0..n {
            let norm = self.rows.row(i).norm();
            if norm > c0 {
                let scale = c0 / norm;
                self.rows.row_mut(i).scale_mut(scale);
            }
        }
    }

    /// Whether all entries are finite.
    pub fn is_finite(&self) -> bool {
        self.rows.iter().all(|v| v.is_finite())
    }

    /// Writes the real-vertex block as CSV, one row per vertex, no header.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n() {
            let row: Vec<String> = self.rows.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the format of [`EmbeddingMatrix::write_csv`] and appends the null row.
    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut width = None;
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let row = t
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse { line: idx + 1, message: format!("bad number: {e}") })?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse { line: idx + 1, message: format!("expected {w} columns, found {}", row.len()) })
                }
                _ => {}
            }
            values.extend(row);
        }
        let r = width.ok_or_else(|| Error::Validation("embedding file has no rows".into()))?;
        let n = values.len() / r;
        Self::from_vertex_rows(&DMatrix::from_row_slice(n, r, &values))
    }

    /// Row-major copy of the real-vertex block, `n * r` values.
    pub(crate) fn vertex_row_major(&self) -> Vec<f64> {
        let (n, r) = (self.n(), self.r());
        let mut out = Vec::with_capacity(n * r);
        for i in 0..n {
            for j in 0..r {
                out.push(self.rows[(i, j)]);
            }
        }
        out
    }
}

/// Sparsity factor and penalty weights.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub s_n: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl ModelParams {
    pub fn new(s_n: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        let p = Self { s_n, lambda0, lambda1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_n > 0.0 && self.s_n <= 1.0) {
            return invalid(format!("sparsity factor must lie in (0, 1], got {}", self.s_n));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) || !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return invalid(format!("penalties must be finite and non-negative, got {} and {}", self.lambda0, self.lambda1));
        }
        Ok(())
    }
}

/// `theta_S = sum_j prod_{i in S} alpha_ij` for a 1-based vertex set `S`.
///
/// Padding `S` with null vertices multiplies by ones, so this equals the
/// full mode-product evaluation of the augmented tuple.
pub fn theta(alpha: &EmbeddingMatrix, s: &[usize]) -> Result<f64> {
    let n = alpha.n();
    if s.is_empty() {
        return invalid("theta needs a non-empty vertex set");
    }
    if let Some(&bad) = s.iter().find(|&&i| i < 1 || i > n) {
        return invalid(format!("vertex {bad} outside 1..={n}"));
    }
    Ok(theta_unchecked(alpha.as_matrix(), s))
}

pub(crate) fn theta_unchecked(rows: &DMatrix<f64>, s: &[usize]) -> f64 {
    let mut total = 0.0;
    for j in 0..rows.ncols() {
        let mut prod = 1.0;
        for &i in s {
            prod *= rows[(i - 1, j)];
        }
        total += prod;
    }
    total
}

/// Logistic function without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Edge probability `p = s_n / (1 + e^{-theta})`.
pub fn link_prob(theta: f64, s_n: f64) -> f64 {
    s_n * sigmoid(theta)
}

/// `1 - p`, accurate when `p` is close to one.
fn one_minus_prob(theta: f64, s_n: f64) -> f64 {
    if s_n == 1.0 {
        sigmoid(-theta)
    } else {
        (1.0 - s_n) + s_n * sigmoid(-theta)
    }
}

fn ln_one_minus_prob(theta: f64, s_n: f64) -> f64 {
    if s_n == 1.0 {
        -softplus(theta)
    } else {
        one_minus_prob(theta, s_n).ln()
    }
}

/// Bernoulli negative log-likelihood `-a log p - (1 - a) log(1 - p)`.
pub fn edge_loss(theta: f64, a: bool, s_n: f64) -> f64 {
    if a {
        softplus(-theta) - s_n.ln()
    } else {
        -ln_one_minus_prob(theta, s_n)
    }
}

/// `dL/dtheta = (p - a)(1 - p/s_n)/(1 - p)`, which simplifies to
/// `-logistic(-theta)` for an edge and `s_n logistic(theta) logistic(-theta) / (1 - p)`
/// otherwise.
pub fn edge_loss_derivative(theta: f64, a: bool, s_n: f64) -> f64 {
    if a {
        -sigmoid(-theta)
    } else if s_n == 1.0 {
        sigmoid(theta)
    } else {
        s_n * sigmoid(theta) * sigmoid(-theta) / one_minus_prob(theta, s_n)
    }
}

/// `edge_loss` and `edge_loss_derivative` sharing one exponential.
#[inline]
pub(crate) fn loss_and_derivative(theta: f64, a: bool, s_n: f64) -> (f64, f64) {
    let e = (-theta.abs()).exp();
    let (sig, sig_neg) = if theta >= 0.0 { (1.0 / (1.0 + e), e / (1.0 + e)) } else { (e / (1.0 + e), 1.0 / (1.0 + e)) };
    if a {
        // softplus(-theta) = max(-theta, 0) + ln(1 + e^{-|theta|})
        ((-theta).max(0.0) + e.ln_1p() - s_n.ln(), -sig_neg)
    } else if s_n == 1.0 {
        (theta.max(0.0) + e.ln_1p(), sig)
    } else {
        let q = (1.0 - s_n) + s_n * sig_neg;
        (-q.ln(), s_n * sig * sig_neg / q)
    }
}
