//! Penalized objective and gradient.
//!
//! Candidate sets are visited depth-first in lexicographic order, so that a
//! set and all its extensions share one prefix product. For a node `U` whose
//! last element is `t`,
//!
//! ```text
//! Q_U = g_U + sum_{l > t} alpha_l (.) Q_{U + l}      (g = dL/dtheta)
//! grad_t += prod_{U \ t} alpha (.) Q_U
//! ```
//!
//! which accumulates every `g_S * prod_{S \ t} alpha` term in `O(r)` per set.
//! Hyperedges are matched by a single forward pointer into the sorted edge list.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{edge_loss, loss_and_derivative, EmbeddingMatrix, Execution, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::hypergraph::{phi, Hypergraph};

const MAX_CHUNKS: usize = 64;

/// Penalized objective in serial mode.
pub fn objective(alpha: &EmbeddingMatrix, h: &Hypergraph, params: &ModelParams, y: &DMatrix<f64>) -> Result<f64> {
    objective_with(alpha, h, params, y, Execution::Serial)
}

/// Penalized objective with an explicit execution mode.
pub fn objective_with(
    alpha: &EmbeddingMatrix,
    h: &Hypergraph,
    params: &ModelParams,
    y: &DMatrix<f64>,
    exec: Execution,
) -> Result<f64> {
    check_inputs(alpha, h, params, y)?;
    let data = data_term(alpha, h, params.s_n, false, exec)?;
    Ok(data.loss + penalty(alpha, params, y)?)
}

/// Gradient with respect to the first `n` rows, in serial mode.
pub fn gradient(alpha: &EmbeddingMatrix, h: &Hypergraph, params: &ModelParams, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    objective_and_gradient(alpha, h, params, y, Execution::Serial).map(|(_, g)| g)
}

/// Objective and its `n x r` gradient from one traversal.
pub fn objective_and_gradient(
    alpha: &EmbeddingMatrix,
    h: &Hypergraph,
    params: &ModelParams,
    y: &DMatrix<f64>,
    exec: Execution,
) -> Result<(f64, DMatrix<f64>)> {
    check_inputs(alpha, h, params, y)?;
    let data = data_term(alpha, h, params.s_n, true, exec)?;
    let value = data.loss + penalty(alpha, params, y)?;
    let grad = full_gradient(alpha, params, y, data.grad.expect("gradient requested"));
    Ok((value, grad))
}

/// The likelihood part of the objective, already divided by `phi(n, m)`.
#[derive(Debug, Clone)]
pub(crate) struct DataTerm {
    pub loss: f64,
    /// `n x r`, present when requested
    pub grad: Option<DMatrix<f64>>,
}

pub(crate) fn data_term(alpha: &EmbeddingMatrix, h: &Hypergraph, s_n: f64, want_grad: bool, exec: Execution) -> Result<DataTerm> {
    let (loss, raw) = walk(alpha, h, s_n, want_grad, exec);
    let scale = 1.0 / phi(h.n(), h.m())? as f64;
    let grad = want_grad.then(|| DMatrix::from_row_slice(alpha.n(), alpha.r(), &raw) * scale);
    Ok(DataTerm { loss: loss * scale, grad })
}

/// `(lambda0/n)||alpha||^2 + (lambda1/n)||alpha - Y||^2`.
pub(crate) fn penalty(alpha: &EmbeddingMatrix, params: &ModelParams, y: &DMatrix<f64>) -> Result<f64> {
    let n = alpha.n() as f64;
    let a = alpha.as_matrix();
    let value = params.lambda0 * a.norm_squared() / n + params.lambda1 * (a - y).norm_squared() / n;
    if !value.is_finite() && a.iter().all(|v| v.is_finite()) {
        return Err(Error::Invariant("penalty terms overflowed".into()));
    }
    Ok(value)
}

/// Adds the penalty gradients to the likelihood gradient of the vertex rows.
pub(crate) fn full_gradient(alpha: &EmbeddingMatrix, params: &ModelParams, y: &DMatrix<f64>, mut data: DMatrix<f64>) -> DMatrix<f64> {
    let n = alpha.n();
    let c0 = 2.0 * params.lambda0 / n as f64;
    let c1 = 2.0 * params.lambda1 / n as f64;
    let a = alpha.as_matrix();
    for j in 0..alpha.r() {
        for i in 0..n {
            data[(i, j)] += c0 * a[(i, j)] + c1 * (a[(i, j)] - y[(i, j)]);
        }
    }
    data
}

pub(crate) fn check_inputs(alpha: &EmbeddingMatrix, h: &Hypergraph, params: &ModelParams, y: &DMatrix<f64>) -> Result<()> {
    params.validate()?;
    if alpha.n() != h.n() {
        return invalid(format!("embedding has {} vertex rows, hypergraph has {} vertices", alpha.n(), h.n()));
    }
    if y.shape() != alpha.as_matrix().shape() {
        return invalid(format!("Y is {:?}, embedding is {:?}", y.shape(), alpha.as_matrix().shape()));
    }
    if y.row(h.n()).iter().any(|&v| v != 1.0) {
        return invalid("the null-vertex row of Y must be all ones");
    }
    Ok(())
}

/// Root ranges `[lo, hi)` (0-based first element) of roughly equal work.
/// Depends only on `(n, m)`, never on the thread count.
fn chunk_bounds(n: usize, m: usize) -> Vec<(usize, usize)> {
    // number of sets whose smallest element is t: sum_{k<m} C(n-1-t, k)
    let work: Vec<f64> = (0..n)
        .map(|t| {
            let rest = (n - 1 - t) as f64;
            let mut c = 1.0;
            let mut total = 1.0;
            for k in 1..m {
                c *= (rest - (k - 1) as f64).max(0.0) / k as f64;
                total += c;
            }
            total
        })
        .collect();
    let sum: f64 = work.iter().sum();
    let target = sum / MAX_CHUNKS.min(n) as f64;
    let mut bounds = Vec::new();
    let mut lo = 0;
    let mut acc = 0.0;
    for (t, w) in work.iter().enumerate() {
        acc += w;
        if acc >= target || t + 1 == n {
            bounds.push((lo, t + 1));
            lo = t + 1;
            acc = 0.0;
        }
    }
    bounds
}

/// Returns the raw loss sum and, if requested, the raw row-major likelihood
/// gradient (before the `1/phi` scaling and penalties).
fn walk(alpha: &EmbeddingMatrix, h: &Hypergraph, s_n: f64, want_grad: bool, exec: Execution) -> (f64, Vec<f64>) {
    let walker = Walker {
        n: h.n(),
        m: h.m(),
        r: alpha.r(),
        alpha: alpha.vertex_row_major(),
        s_n,
        edges: h.edges(),
        want_grad,
    };
    let bounds = chunk_bounds(walker.n, walker.m);
    let partials: Vec<Partial> = match exec {
        Execution::Serial => bounds.iter().map(|&(lo, hi)| walker.run(lo, hi)).collect(),
        Execution::Parallel => bounds.par_iter().map(|&(lo, hi)| walker.run(lo, hi)).collect(),
    };
    let mut loss = 0.0;
    let mut grad = if want_grad { vec![0.0; walker.n * walker.r] } else { Vec::new() };
    for p in partials {
        loss += p.loss;
        for (g, v) in grad.iter_mut().zip(&p.grad) {
            *g += v;
        }
    }
    (loss, grad)
}

struct Walker<'a> {
    n: usize,
    m: usize,
    r: usize,
    alpha: Vec<f64>,
    s_n: f64,
    edges: &'a [Vec<usize>],
    want_grad: bool,
}

struct Partial {
    loss: f64,
    grad: Vec<f64>,
}

struct State {
    /// 0-based vertices of the current set
    stack: Vec<usize>,
    /// prefix[d] = product of the first d rows on the stack; prefix[0] = ones
    prefix: Vec<f64>,
    /// q[d] = accumulated Q vector for the node at depth d
    q: Vec<f64>,
    edge_ptr: usize,
    loss: f64,
    grad: Vec<f64>,
}

impl Walker<'_> {
    fn row(&self, i: usize) -> &[f64] {
        &self.alpha[i * self.r..(i + 1) * self.r]
    }

    fn run(&self, lo: usize, hi: usize) -> Partial {
        let r = self.r;
        let mut prefix = vec![0.0; (self.m + 1) * r];
        prefix[..r].fill(1.0);
        let mut st = State {
            stack: Vec::with_capacity(self.m),
            prefix,
            q: vec![0.0; (self.m + 1) * r],
            edge_ptr: self.edges.partition_point(|e| e[0] < lo + 1),
            loss: 0.0,
            grad: if self.want_grad { vec![0.0; self.n * r] } else { Vec::new() },
        };
        for t in lo..hi {
            self.visit(&mut st, t, 1);
        }
        Partial { loss: st.loss, grad: st.grad }
    }

    /// Consumes the next hyperedge if it equals the current stack.
    fn take_edge(&self, st: &mut State) -> bool {
        let Some(e) = self.edges.get(st.edge_ptr) else {
            return false;
        };
        let hit = e.len() == st.stack.len() && e.iter().zip(&st.stack).all(|(&a, &b)| a == b + 1);
        if hit {
            st.edge_ptr += 1;
        }
        hit
    }

    fn visit(&self, st: &mut State, t: usize, depth: usize) {
        let r = self.r;
        st.stack.push(t);
        {
            let (head, tail) = st.prefix.split_at_mut(depth * r);
            let parent = &head[(depth - 1) * r..];
            let cur = &mut tail[..r];
            for ((c, p), a) in cur.iter_mut().zip(parent).zip(self.row(t)) {
                *c = p * a;
            }
        }
        let cur_off = depth * r;
        let theta: f64 = st.prefix[cur_off..cur_off + r].iter().sum();
        let hit = self.take_edge(st);
        if self.want_grad {
            let (loss, g) = loss_and_derivative(theta, hit, self.s_n);
            st.loss += loss;
            st.q[cur_off..cur_off + r].fill(g);
        } else {
            st.loss += edge_loss(theta, hit, self.s_n);
        }

        if depth < self.m {
            for l in t + 1..self.n {
                if depth + 1 == self.m {
                    self.leaf(st, l, depth);
                } else {
                    self.visit(st, l, depth + 1);
                    if self.want_grad {
                        let (head, tail) = st.q.split_at_mut((depth + 1) * r);
                        let qu = &mut head[cur_off..cur_off + r];
                        let qc = &tail[..r];
                        for ((u, c), a) in qu.iter_mut().zip(qc).zip(self.row(l)) {
                            *u += a * c;
                        }
                    }
                }
            }
        }

        if self.want_grad {
            let parent = &st.prefix[(depth - 1) * r..depth * r];
            let qu = &st.q[cur_off..cur_off + r];
            let g = &mut st.grad[t * r..(t + 1) * r];
            for ((gv, p), q) in g.iter_mut().zip(parent).zip(qu) {
                *gv += p * q;
            }
        }
        st.stack.pop();
    }

    /// Node at maximal depth: its Q vector is the scalar g times ones.
    fn leaf(&self, st: &mut State, l: usize, parent_depth: usize) {
        let r = self.r;
        let off = parent_depth * r;
        let row = self.row(l);
        let theta: f64 = st.prefix[off..off + r].iter().zip(row).map(|(p, a)| p * a).sum();
        st.stack.push(l);
        let hit = self.take_edge(st);
        st.stack.pop();
        if !self.want_grad {
            st.loss += edge_loss(theta, hit, self.s_n);
        } else {
            let (loss, g) = loss_and_derivative(theta, hit, self.s_n);
            st.loss += loss;
            for (u, a) in st.q[off..off + r].iter_mut().zip(row) {
                *u += g * a;
            }
            let prefix = &st.prefix[off..off + r];
            for (gv, p) in st.grad[l * r..(l + 1) * r].iter_mut().zip(prefix) {
                *gv += g * p;
            }
        }
    }
}
