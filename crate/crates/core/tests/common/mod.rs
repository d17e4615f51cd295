//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use proximal_core::{CausalGraph, NodeKind};
use rand::Rng;

/// A DAG on nodes `0..n` given by its edge list.
#[derive(Debug, Clone)]
pub struct Dag {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn name(i: usize) -> String {
    format!("N{i}")
}

impl Dag {
    /// Random DAG: nodes are shuffled, then each forward pair becomes an edge
    /// with probability `p`.
    pub fn random<R: Rng>(rng: &mut R, n: usize, p: f64) -> Dag {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((order[i], order[j]));
                }
            }
        }
        Dag { n, edges }
    }

    pub fn graph(&self) -> CausalGraph {
        let names: Vec<String> = (0..self.n).map(name).collect();
        let nodes: Vec<(&str, NodeKind)> = names.iter().map(|s| (s.as_str(), NodeKind::Observed)).collect();
        let edges: Vec<(&str, &str)> = self.edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str())).collect();
        CausalGraph::new(&nodes, &edges).expect("random DAG is valid")
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// `v` together with everything reachable along directed edges.
    fn descendants_incl(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if !seen[u] {
                seen[u] = true;
                stack.extend(self.edges.iter().filter(|e| e.0 == u).map(|e| e.1));
            }
        }
        seen
    }

    /// Whether the walk `path` is active given `c`.
    pub fn walk_is_active(&self, path: &[usize], c: &[usize]) -> bool {
        for k in 1..path.len().saturating_sub(1) {
            let (p, m, q) = (path[k - 1], path[k], path[k + 1]);
            let collider = self.has_edge(p, m) && self.has_edge(q, m);
            let active = if collider {
                self.descendants_incl(m).iter().enumerate().any(|(v, &d)| d && c.contains(&v))
            } else {
                !c.contains(&m)
            };
            if !active {
                return false;
            }
        }
        true
    }

    /// d-separation by enumerating every simple path between `a` and `b`.
    pub fn brute_d_separated(&self, a: &[usize], b: &[usize], c: &[usize]) -> bool {
        let adjacent = |u: usize| -> Vec<usize> {
            (0..self.n).filter(|&v| self.has_edge(u, v) || self.has_edge(v, u)).collect()
        };
        fn extend(
            dag: &Dag,
            path: &mut Vec<usize>,
            b: &[usize],
            c: &[usize],
            adjacent: &dyn Fn(usize) -> Vec<usize>,
        ) -> bool {
            let last = *path.last().unwrap();
            if path.len() > 1 && b.contains(&last) && dag.walk_is_active(path, c) {
                return true;
            }
            for v in adjacent(last) {
                if path.contains(&v) {
                    continue;
                }
                path.push(v);
                // a blocked prefix stays blocked in every extension
                if dag.walk_is_active(path, c) && extend(dag, path, b, c, adjacent) {
                    return true;
                }
                path.pop();
            }
            false
        }
        for &s in a {
            let mut path = vec![s];
            if extend(self, &mut path, b, c, &adjacent) {
                return false;
            }
        }
        true
    }
}
