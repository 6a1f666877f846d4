//! Hypergraph data model, `.hg` ingestion, preprocessing, null-vertex
//! augmentation and the combinatorial helpers shared by the other modules.
//!
//! Vertex ids are 1-based everywhere in the public API: a hypergraph on `n`
//! vertices uses ids `1..=n`, and `n + 1` denotes the null vertex.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// An undirected, unweighted hypergraph with range `m`.
///
/// Edges are strictly increasing vertex lists, deduplicated, and kept in
/// lexicographic order (a prefix sorts before its extensions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    m: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Builds a hypergraph from 1-based edges. Each edge is sorted; repeated
    /// vertices inside an edge, ids outside `1..=n`, empty edges and edges
    /// longer than `m` are rejected. Duplicate edges are collapsed.
    pub fn new<I>(n: usize, m: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        if n == 0 {
            return invalid("hypergraph needs at least one vertex");
        }
        if m < 2 {
            return invalid(format!("range m must be at least 2, got {m}"));
        }
        let mut set = BTreeSet::new();
        for mut e in edges {
            e.sort_unstable();
            if e.is_empty() {
                return Err(Error::Validation("empty hyperedge".into()));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!("repeated vertex in hyperedge {e:?}")));
            }
            if e[0] < 1 || e[e.len() - 1] > n {
                return Err(Error::Validation(format!("hyperedge {e:?} has a vertex outside 1..={n}")));
            }
            if e.len() > m {
                return Err(Error::Validation(format!("hyperedge {e:?} is longer than the range {m}")));
            }
            set.insert(e);
        }
        Ok(Self { n, m, edges: set.into_iter().collect() })
    }

    /// Number of real vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Range: the maximum admissible hyperedge cardinality.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Id of the null vertex, `n + 1`.
    pub fn null_vertex(&self) -> usize {
        self.n + 1
    }

    /// Whether the sorted vertex set `s` is a hyperedge.
    pub fn contains(&self, s: &[usize]) -> bool {
        self.edges.binary_search_by(|e| e.as_slice().cmp(s)).is_ok()
    }

    /// Degree of every vertex; index `i - 1` holds the degree of vertex `i`.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            for &v in e {
                deg[v - 1] += 1;
            }
        }
        deg
    }

    /// Same hypergraph with a different (not smaller than needed) range.
    pub fn with_range(&self, m: usize) -> Result<Self> {
        Self::new(self.n, m, self.edges.iter().cloned())
    }

    /// Writes the `.hg` text form: a `#n <n> m <m>` header, then one edge per line.
    pub fn write_hg<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#n {} m {}", self.n, self.m)?;
        for e in &self.edges {
            let line: Vec<String> = e.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Knobs applied while reading a hyperedge list.
///
/// Processing order: parse, deduplicate vertices inside each line, size
/// filter, clique expansion, edge deduplication.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Vertex count; defaults to the header value, else the largest surviving id.
    pub n: Option<usize>,
    /// Range; defaults to the clique cap, else the header value (ignored when
    /// `max_size` is set), else the largest surviving edge size.
    pub m: Option<usize>,
    pub min_size: Option<usize>,
    pub max_size: Option<usize>,
    /// Replace edges larger than this by all their subsets of this size.
    pub clique_cap: Option<usize>,
}

/// Reads a whitespace-separated hyperedge list (`.hg` format).
///
/// Lines starting with `#` are comments, except a header of the form
/// `#n <n> m <m>`. Empty lines are skipped.
pub fn load_hyperedge_list<R: BufRead>(source: R, options: &IngestOptions) -> Result<Hypergraph> {
    let mut header_n = None;
    let mut header_m = None;
    let mut raw: Vec<Vec<usize>> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((n, m)) = parse_header(comment) {
                header_n = Some(n);
                header_m = Some(m);
            }
            continue;
        }
        let mut edge = Vec::new();
        for tok in trimmed.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("expected an integer vertex id, found {tok:?}"),
            })?;
            if v < 1 {
                return Err(Error::Validation(format!("line {lineno}: vertex id {v} is below 1")));
            }
            edge.push(v as usize);
        }
        edge.sort_unstable();
        edge.dedup();
        raw.push(edge);
    }

    let min = options.min_size.unwrap_or(1);
    let max = options.max_size.unwrap_or(usize::MAX);
    let mut kept: Vec<Vec<usize>> = raw.into_iter().filter(|e| e.len() >= min && e.len() <= max).collect();
    if let Some(cap) = options.clique_cap {
        if cap < 2 {
            return invalid(format!("clique cap must be at least 2, got {cap}"));
        }
        kept = expand_edges(kept, cap);
    }
    let before = kept.len();
    let unique: BTreeSet<Vec<usize>> = kept.into_iter().collect();
    if before > unique.len() {
        log::info!("collapsed {} duplicate hyperedges", before - unique.len());
    }
    if unique.is_empty() {
        return Err(Error::EmptyNetwork);
    }

    let max_id = unique.iter().filter_map(|e| e.last().copied()).max().unwrap_or(1);
    let max_len = unique.iter().map(Vec::len).max().unwrap_or(1);
    let n = options.n.or(header_n).unwrap_or(max_id);
    let filtered_m = if options.max_size.is_some() { Some(max_len.max(2)) } else { header_m };
    let m = options.m.or(options.clique_cap).or(filtered_m).unwrap_or(max_len.max(2));
    if max_id > n {
        return Err(Error::Validation(format!("vertex id {max_id} exceeds n = {n}")));
    }
    Hypergraph::new(n, m, unique)
}

fn parse_header(comment: &str) -> Option<(usize, usize)> {
    let toks: Vec<&str> = comment.split_whitespace().collect();
    match toks.as_slice() {
        ["n", n, "m", m] => Some((n.parse().ok()?, m.parse().ok()?)),
        _ => None,
    }
}

fn expand_edges(edges: Vec<Vec<usize>>, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(edges.len());
    for e in edges {
        if e.len() <= cap {
            out.push(e);
        } else {
            let mut idx: Vec<usize> = (0..cap).collect();
            loop {
                out.push(idx.iter().map(|&i| e[i]).collect());
                if !next_combination(&mut idx, e.len()) {
                    break;
                }
            }
        }
    }
    out
}

/// Replaces every edge larger than `m_cap` by all of its `m_cap`-subsets.
/// The result has range `m_cap`.
pub fn clique_expand(h: &Hypergraph, m_cap: usize) -> Result<Hypergraph> {
    if m_cap < 2 {
        return invalid(format!("clique cap must be at least 2, got {m_cap}"));
    }
    Hypergraph::new(h.n, m_cap, expand_edges(h.edges.clone(), m_cap))
}

/// Reads one integer label per line; line `i` holds the label of vertex `i`.
pub fn read_labels<R: BufRead>(source: R) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: usize = t.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("expected a positive integer label, found {t:?}"),
        })?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn write_labels<W: Write>(labels: &[usize], mut w: W) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// An index tuple of the augmented adjacency tensor in canonical order:
/// strictly increasing real vertices followed by null-vertex padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalTuple {
    indices: Vec<usize>,
    n: usize,
}

impl CanonicalTuple {
    /// Validates a raw index tuple over `1..=n+1`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let null = n + 1;
        let real = indices.iter().take_while(|&&i| i <= n).count();
        if real == 0 {
            return Err(Error::Validation("tuple has no real vertex".into()));
        }
        if indices.iter().any(|&i| i == 0 || i > null) {
            return Err(Error::Validation(format!("tuple {indices:?} has an index outside 1..={null}")));
        }
        if indices[real..].iter().any(|&i| i != null) {
            return Err(Error::Validation(format!("tuple {indices:?}: null padding must be trailing")));
        }
        if indices[..real].windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!("tuple {indices:?}: real vertices must strictly increase")));
        }
        Ok(Self { indices, n })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The vertex set obtained by dropping null padding.
    pub fn strip(&self) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| i <= self.n).collect()
    }

    /// Number of null-vertex copies.
    pub fn padding(&self) -> usize {
        self.indices.len() - self.strip().len()
    }
}

/// Pads a vertex set with `m - |edge|` copies of the null vertex `n + 1`.
pub fn augment(edge: &[usize], m: usize, n: usize) -> Result<CanonicalTuple> {
    if edge.is_empty() || edge.len() > m {
        return invalid(format!("edge of size {} cannot be augmented to range {m}", edge.len()));
    }
    let mut indices = edge.to_vec();
    indices.sort_unstable();
    indices.resize(m, n + 1);
    CanonicalTuple::new(indices, n)
}

/// Number of hyperedges containing vertex `i`.
pub fn degree(h: &Hypergraph, i: usize) -> Result<usize> {
    if i < 1 || i > h.n {
        return invalid(format!("vertex {i} outside 1..={}", h.n));
    }
    Ok(h.edges.iter().filter(|e| e.binary_search(&i).is_ok()).count())
}

/// Exact binomial coefficient with overflow detection.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::Overflow(format!("C({n},{k})")))?
            / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return Err(Error::Overflow(format!("C({n},{k})")));
        }
    }
    Ok(acc as u64)
}

/// Number of candidate hyperedges: `sum_{k=1}^{m} C(n, k)`.
pub fn phi(n: usize, m: usize) -> Result<u64> {
    if n == 0 || m == 0 {
        return invalid(format!("phi needs n >= 1 and m >= 1, got n={n}, m={m}"));
    }
    let mut total: u64 = 0;
    for k in 1..=m.min(n) {
        total = total
            .checked_add(binomial(n, k)?)
            .ok_or_else(|| Error::Overflow(format!("phi({n},{m})")))?;
    }
    Ok(total)
}

/// Advances a strictly increasing index combination over `0..len`.
pub(crate) fn next_combination(idx: &mut [usize], len: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < len - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Streams every non-empty subset of `1..=n` with at most `m` elements,
/// ordered by size and then lexicographically. Nothing is materialized
/// beyond the current subset.
#[derive(Debug, Clone)]
pub struct IndexSets {
    n: usize,
    max_size: usize,
    current: Vec<usize>,
    fresh: bool,
    done: bool,
}

impl IndexSets {
    pub fn new(n: usize, m: usize) -> Self {
        Self::sizes(n, 1, m)
    }

    /// Only subsets of exactly `k` elements. Size classes are independent
    /// ranges, so a traversal can be split across them.
    pub fn of_size(n: usize, k: usize) -> Self {
        Self::sizes(n, k, k)
    }

    fn sizes(n: usize, min: usize, max: usize) -> Self {
        let max_size = max.min(n);
        let done = min == 0 || min > max_size;
        Self { n, max_size, current: (1..=min).collect(), fresh: true, done }
    }

    /// Lending-style advance that avoids allocating per subset.
    pub fn next_set(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
        } else {
            self.advance();
            if self.done {
                return None;
            }
        }
        Some(&self.current)
    }

    fn advance(&mut self) {
        let k = self.current.len();
        let n = self.n;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < n - k + i + 1 {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return;
            }
        }
        if k < self.max_size {
            self.current = (1..=k + 1).collect();
        } else {
            self.done = true;
        }
    }
}

impl Iterator for IndexSets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_set().map(<[usize]>::to_vec)
    }
}

/// Convenience wrapper around [`IndexSets::new`].
pub fn enumerate_index_sets(n: usize, m: usize) -> IndexSets {
    IndexSets::new(n, m)
}

/// Hyperedge density, used as the automatic sparsity factor.
///
/// The denominator counts candidate sets from the smallest edge size present
/// up to `m`, so it equals `phi(n, m)` whenever singleton edges occur and
/// ignores size classes removed by an ingestion filter otherwise.
pub fn estimate_sparsity(h: &Hypergraph) -> Result<f64> {
    let smallest = h.edges.iter().map(Vec::len).min().ok_or(Error::EmptyNetwork)?;
    let mut total: u64 = 0;
    for k in smallest..=h.m.min(h.n) {
        total = total
            .checked_add(binomial(h.n, k)?)
            .ok_or_else(|| Error::Overflow(format!("candidate sets for n={}, m={}", h.n, h.m)))?;
    }
    if h.num_edges() as u64 > total {
        return Err(Error::Invariant(format!(
            "{} edges exceed the {total} candidate sets",
            h.num_edges()
        )));
    }
    Ok(h.num_edges() as f64 / total as f64)
}
