//! Brute-force oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nlpi_consensus::DiGraph;
use rand::rngs::StdRng;
use rand::Rng;

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Random digraph on `n` nodes, each ordered pair present with probability `p`,
/// weights uniform in `[0.1, 3)`.
pub fn random_digraph(rng: &mut StdRng, n: usize, p: f64) -> DiGraph {
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random_bool(p) {
                edges.push((from, to, rng.random_range(0.1..3.0)));
            }
        }
    }
    DiGraph::from_edges(n, &edges).unwrap()
}

/// Random strongly connected digraph: a randomly permuted Hamiltonian cycle
/// plus extra random edges.
pub fn random_strongly_connected(rng: &mut StdRng, n: usize) -> DiGraph {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut w = vec![0.0; n * n];
    if n > 1 {
        for k in 0..n {
            let (from, to) = (perm[k], perm[(k + 1) % n]);
            w[to * n + from] = rng.random_range(0.1..3.0);
        }
    }
    let p = rng.random_range(0.0..0.6);
    for from in 0..n {
        for to in 0..n {
            if from != to && w[to * n + from] == 0.0 && rng.random_bool(p) {
                w[to * n + from] = rng.random_range(0.1..3.0);
            }
        }
    }
    DiGraph::from_weights(n, w).unwrap()
}

/// `reach[a][b]`: a directed path from `a` to `b` exists (reflexive), by
/// repeated relaxation of the adjacency relation.
pub fn reachability(g: &DiGraph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut r = vec![vec![false; n]; n];
    for (a, row) in r.iter_mut().enumerate() {
        row[a] = true;
    }
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if r[a][b] {
                    continue;
                }
                if (0..n).any(|c| r[a][c] && g.has_edge(c, b)) {
                    r[a][b] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Mutual-reachability classes, each sorted, ordered by smallest member.
pub fn oracle_sccs(g: &DiGraph) -> Vec<Vec<usize>> {
    let r = reachability(g);
    let n = g.n();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for a in 0..n {
        if seen[a] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&b| r[a][b] && r[b][a]).collect();
        for &b in &class {
            seen[b] = true;
        }
        out.push(class);
    }
    out
}

/// Classes with no edge entering from outside the class.
pub fn oracle_basis(g: &DiGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    oracle_sccs(g)
        .into_iter()
        .filter(|c| !(0..n).any(|u| !c.contains(&u) && c.iter().any(|&m| g.has_edge(u, m))))
        .collect()
}

/// Union over the family of every basis bicomponent's induced edges is
/// strongly connected on all nodes.
pub fn oracle_joint_basis(gs: &[DiGraph]) -> bool {
    let n = gs[0].n();
    let mut edges = Vec::new();
    for g in gs {
        for c in oracle_basis(g) {
            for &a in &c {
                for &b in &c {
                    if g.has_edge(a, b) && !edges.iter().any(|&(x, y, _)| x == a && y == b) {
                        edges.push((a, b, 1.0));
                    }
                }
            }
        }
    }
    let u = DiGraph::from_edges(n, &edges).unwrap();
    reachability(&u).iter().all(|row| row.iter().all(|&x| x))
}

/// Both sides of the weighted disagreement identity for `omega`, the left
/// null vector of the graph's Laplacian, and the sum of absolute terms.
pub fn disagreement_sides(g: &DiGraph, omega: &[f64], zeta: &[f64]) -> (f64, f64, f64) {
    let n = g.n();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for m in 0..n {
        for k in 0..n {
            let a = g.weight(m, k);
            let t1 = omega[m] * a * zeta[m] * (zeta[m] - zeta[k]);
            let t2 = 0.5 * omega[m] * a * (zeta[m] - zeta[k]).powi(2);
            lhs += t1;
            rhs += t2;
            scale += t1.abs() + t2.abs();
        }
    }
    (lhs, rhs, scale)
}
