//! Weighted digraphs over a fixed agent set and the connectivity structure
//! the consensus controllers rely on: Laplacians, strongly connected
//! components, basis bicomponents (source components of the condensation)
//! and the zero-eigenvalue left eigenvector of a reduced Laplacian.
//!
//! Agents are 0-indexed throughout the API. The text edge-list format is
//! 1-indexed.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on Laplacian row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Singular values below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Smallest admissible entry of a normalized left null vector.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Relative residual allowed on `omega^T L = 0`.
pub const NULL_RESIDUAL_TOL: f64 = 1e-10;

/// A weighted directed graph over `n` agents.
///
/// `weight(i, k)` is `a_ik`, the coupling strength of the edge `k -> i`
/// (agent `i` listens to agent `k`). An edge exists iff its weight is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DiGraph {
    n: usize,
    weights: Vec<f64>,
}

impl DiGraph {
    /// Graph with `n` agents and no edges.
    pub fn edgeless(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph(
                "a graph needs at least one agent".into(),
            ));
        }
        Ok(DiGraph {
            n,
            weights: vec![0.0; n * n],
        })
    }

    /// Build from a row-major `n x n` adjacency matrix (`weights[i * n + k] = a_ik`).
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph(
                "a graph needs at least one agent".into(),
            ));
        }
        if weights.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: weights.len(),
            });
        }
        for i in 0..n {
            for k in 0..n {
                let a = weights[i * n + k];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight a[{i}][{k}] = {a} must be finite and nonnegative"
                    )));
                }
                if i == k && a != 0.0 {
                    return Err(Error::InvalidGraph(format!("self-loop at agent {i}")));
                }
            }
        }
        Ok(DiGraph { n, weights })
    }

    /// Build from `(from, to, weight)` triples, 0-indexed. Repeated edges are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = DiGraph::edgeless(n)?;
        for &(from, to, w) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {from} -> {to} references an agent outside 0..{n}"
                )));
            }
            if from == to {
                return Err(Error::InvalidGraph(format!("self-loop at agent {from}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {from} -> {to} has weight {w}; weights must be positive"
                )));
            }
            let slot = &mut g.weights[to * n + from];
            if *slot != 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {from} -> {to}"
                )));
            }
            *slot = w;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `a_ik`: weight of the edge `k -> i`.
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.weights[i * self.n + k]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weight(to, from) > 0.0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Edges as `(from, to, weight)`, ordered by `from` then `to`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for from in 0..self.n {
            for to in 0..self.n {
                let w = self.weight(to, from);
                if w > 0.0 {
                    out.push((from, to, w));
                }
            }
        }
        out
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// `L = D - A` with `D` the weighted in-degree matrix.
    pub fn laplacian(&self) -> Laplacian {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    data[i * n + k] = -self.weight(i, k);
                }
            }
            data[i * n + i] = self.in_degree(i);
        }
        Laplacian { n, data }
    }

    fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut out = vec![Vec::new(); n];
        for (from, to, _) in self.edges() {
            out[from].push(to);
        }
        debug_assert_eq!(out.len(), n);
        out
    }

    /// Partition of the agents into maximal strongly connected sets.
    ///
    /// Each component is sorted ascending and components are ordered by their
    /// smallest member, so the result is canonical.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut comps = tarjan(&self.out_neighbors());
        for c in comps.iter_mut() {
            c.sort_unstable();
        }
        comps.sort_unstable_by_key(|c| c[0]);
        comps
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Strongly connected components with no incoming edge from outside,
    /// i.e. the sources of the condensation DAG. Never empty.
    pub fn basis_bicomponents(&self) -> Vec<BasisBicomponent> {
        let comps = self.strongly_connected_components();
        let mut comp_of = vec![0usize; self.n];
        for (c, members) in comps.iter().enumerate() {
            for &v in members {
                comp_of[v] = c;
            }
        }
        let mut has_incoming = vec![false; comps.len()];
        for (from, to, _) in self.edges() {
            if comp_of[from] != comp_of[to] {
                has_incoming[comp_of[to]] = true;
            }
        }
        comps
            .into_iter()
            .zip(has_incoming)
            .filter(|(_, incoming)| !incoming)
            .map(|(members, _)| BasisBicomponent { members })
            .collect()
    }

    /// Same agent set, keeping only edges with both endpoints in `members`.
    pub fn restricted_to(&self, members: &[usize]) -> DiGraph {
        let n = self.n;
        let mut keep = vec![false; n];
        for &m in members {
            keep[m] = true;
        }
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                if keep[i] && keep[k] {
                    weights[i * n + k] = self.weight(i, k);
                }
            }
        }
        DiGraph { n, weights }
    }

    /// Parse the plain-text edge-list format:
    ///
    /// ```text
    /// # comment
    /// n=4
    /// 1 2 0.5     # edge from agent 1 to agent 2, weight 0.5
    /// ```
    ///
    /// `source_name` only labels diagnostics.
    pub fn parse_edge_list(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if n.is_none() {
                let value = line
                    .strip_prefix('n')
                    .map(str::trim_start)
                    .and_then(|rest| rest.strip_prefix('='))
                    .ok_or_else(|| {
                        err(
                            lineno,
                            format!("expected header `n=<count>`, found `{line}`"),
                        )
                    })?;
                let count: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid agent count `{}`", value.trim())))?;
                if count == 0 {
                    return Err(err(lineno, "agent count must be positive".into()));
                }
                n = Some(count);
                continue;
            }
            let count = n.unwrap_or_default();
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(
                    lineno,
                    format!(
                        "expected `<from> <to> <weight>`, found {} fields",
                        fields.len()
                    ),
                ));
            }
            let agent = |s: &str| -> Result<usize> {
                let v: usize = s
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid agent index `{s}`")))?;
                if v == 0 || v > count {
                    return Err(err(lineno, format!("agent index {v} outside 1..={count}")));
                }
                Ok(v - 1)
            };
            let from = agent(fields[0])?;
            let to = agent(fields[1])?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| err(lineno, format!("invalid weight `{}`", fields[2])))?;
            edges.push((from, to, w, lineno));
        }
        let n = n.ok_or_else(|| err(0, "missing header `n=<count>`".into()))?;
        let mut g = DiGraph::edgeless(n)?;
        for (from, to, w, lineno) in edges {
            if from == to {
                return Err(err(lineno, format!("self-loop at agent {}", from + 1)));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(err(lineno, format!("weight {w} must be positive")));
            }
            let slot = &mut g.weights[to * n + from];
            if *slot != 0.0 {
                return Err(err(
                    lineno,
                    format!("duplicate edge {} -> {}", from + 1, to + 1),
                ));
            }
            *slot = w;
        }
        Ok(g)
    }

    /// Inverse of [`DiGraph::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for (from, to, w) in self.edges() {
            let _ = writeln!(s, "{} {} {}", from + 1, to + 1, w);
        }
        s
    }
}

/// Iterative Tarjan over an out-adjacency list.
fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    let mut comps = Vec::new();
    let mut next_index = 0usize;
    // (node, position in its adjacency list)
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

/// A strongly connected set of agents receiving no edge from outside the set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisBicomponent {
    members: Vec<usize>,
}

impl BasisBicomponent {
    /// Check `members` against `g` and wrap it.
    pub fn new(g: &DiGraph, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() || members.iter().any(|&m| m >= g.n()) {
            return Err(Error::arg(
                "basis bicomponent members must be nonempty agent indices",
            ));
        }
        if g.basis_bicomponents().iter().any(|b| b.members == members) {
            Ok(BasisBicomponent { members })
        } else {
            Err(Error::Precondition(format!(
                "{members:?} is not a basis bicomponent of the graph"
            )))
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Edge-set union of graphs over the same agents. Where several inputs carry
/// the same edge the largest weight is kept.
pub fn union_graph(gs: &[DiGraph]) -> Result<DiGraph> {
    let first = gs
        .first()
        .ok_or_else(|| Error::arg("union of an empty graph list"))?;
    let mut out = first.clone();
    for g in &gs[1..] {
        if g.n != out.n {
            return Err(Error::Dimension {
                expected: out.n,
                got: g.n,
            });
        }
        for (a, &b) in out.weights.iter_mut().zip(&g.weights) {
            *a = a.max(b);
        }
    }
    Ok(out)
}

/// The family has a jointly strongly connected basis when the union of all
/// basis bicomponents of all its graphs is strongly connected and touches
/// every agent.
pub fn has_jointly_strongly_connected_basis(gs: &[DiGraph]) -> Result<bool> {
    let n = gs
        .first()
        .ok_or_else(|| Error::arg("empty graph family"))?
        .n();
    let mut covered = vec![false; n];
    let mut parts = Vec::new();
    for g in gs {
        if g.n() != n {
            return Err(Error::Dimension {
                expected: n,
                got: g.n(),
            });
        }
        for b in g.basis_bicomponents() {
            for &m in b.members() {
                covered[m] = true;
            }
            parts.push(g.restricted_to(b.members()));
        }
    }
    if !covered.iter().all(|&c| c) {
        return Ok(false);
    }
    Ok(union_graph(&parts)?.is_strongly_connected())
}

/// Graph Laplacian: zero row sums, nonpositive off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    n: usize,
    data: Vec<f64>,
}

impl Laplacian {
    /// Validate a dense row-major matrix as a Laplacian.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::arg("empty Laplacian"));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let l = Laplacian { n, data };
        l.check()?;
        Ok(l)
    }

    fn check(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("Laplacian has non-finite entries"));
        }
        for i in 0..self.n {
            for k in 0..self.n {
                let v = self.get(i, k);
                if (i == k && v < 0.0) || (i != k && v > 0.0) {
                    return Err(Error::arg(format!(
                        "entry ({i},{k}) = {v} has the wrong sign for a Laplacian"
                    )));
                }
            }
        }
        if let Some(i) = self.first_unbalanced_row() {
            return Err(Error::arg(format!("row {i} does not sum to zero")));
        }
        Ok(())
    }

    fn first_unbalanced_row(&self) -> Option<usize> {
        let scale = self.max_abs();
        (0..self.n).find(|&i| self.row(i).iter().sum::<f64>().abs() > ROW_SUM_TOL * scale)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.n + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `(L y)_i`, the weighted disagreement of agent `i` with its neighbors.
    pub fn row_dot(&self, i: usize, y: &[f64]) -> f64 {
        self.row(i).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `L y`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: y.len(),
            });
        }
        Ok((0..self.n).map(|i| self.row_dot(i, y)).collect())
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Numerical rank from the singular values, threshold `RANK_TOL * sigma_max`.
    pub fn rank(&self) -> usize {
        let sv = self.to_matrix().singular_values();
        let smax = sv.iter().fold(0.0f64, |m, &s| m.max(s));
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
    }

    /// Delete the rows and columns of agents outside `members`.
    ///
    /// Fails unless the remaining rows still sum to zero, which holds exactly
    /// when no edge enters `members` from outside.
    pub fn reduced(&self, members: &[usize]) -> Result<Laplacian> {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::arg("empty member set"));
        }
        if let Some(&m) = members.iter().find(|&&m| m >= self.n) {
            return Err(Error::arg(format!("agent {m} outside 0..{}", self.n)));
        }
        let r = members.len();
        let mut data = Vec::with_capacity(r * r);
        for &i in &members {
            for &k in &members {
                data.push(self.get(i, k));
            }
        }
        let reduced = Laplacian { n: r, data };
        // Compare against the scale of the full matrix so a slice that drops
        // every incoming weight is not judged against a zero scale.
        let scale = self.max_abs();
        for (row, &agent) in members.iter().enumerate() {
            let sum: f64 = reduced.row(row).iter().sum();
            if sum.abs() > ROW_SUM_TOL * scale {
                return Err(Error::Precondition(format!(
                    "agent {agent} receives edges from outside the member set (row sum {sum})"
                )));
            }
        }
        Ok(reduced)
    }

    /// Positive left eigenvector for the zero eigenvalue, normalized to sum 1.
    ///
    /// Solves `L^T w = 0` with one equation swapped for `sum(w) = 1`.
    /// Requires the Laplacian of a strongly connected graph.
    pub fn left_null_vector(&self) -> Result<LeftEigenvector> {
        let n = self.n;
        if n == 1 {
            return Ok(LeftEigenvector { omega: vec![1.0] });
        }
        let rank = self.rank();
        if rank != n - 1 {
            return Err(Error::Structure(format!(
                "zero eigenvalue has multiplicity {} (rank {rank} of {n}); graph is not strongly connected",
                n - rank
            )));
        }
        let mut a = self.to_matrix().transpose();
        for k in 0..n {
            a[(n - 1, k)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let omega = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Structure("singular normalization system".into()))?;
        let omega: Vec<f64> = omega.iter().copied().collect();
        if let Some((m, w)) = omega.iter().enumerate().find(|(_, &w)| w <= POSITIVITY_TOL) {
            return Err(Error::Structure(format!(
                "left null vector entry {m} = {w} is not positive; graph is not strongly connected"
            )));
        }
        let v = LeftEigenvector { omega };
        let residual = v.residual(self);
        if residual > NULL_RESIDUAL_TOL * self.frobenius_norm() {
            return Err(Error::Structure(format!(
                "left null vector residual {residual} exceeds tolerance"
            )));
        }
        Ok(v)
    }
}

/// Normalized positive left eigenvector of a strongly connected Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftEigenvector {
    omega: Vec<f64>,
}

impl LeftEigenvector {
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Euclidean norm of `omega^T L`.
    pub fn residual(&self, l: &Laplacian) -> f64 {
        (0..l.n())
            .map(|k| {
                let s: f64 = (0..l.n()).map(|m| self.omega[m] * l.get(m, k)).sum();
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }
}
