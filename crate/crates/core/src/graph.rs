use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};

/// Hard cap on the size of dense matrices this crate will materialize.
pub const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Directedness {
    Undirected,
    Directed,
}

/// A single weighted edge. For undirected graphs the invariant `u < v` holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Weighted graph over nodes `0..n` with strictly positive edge weights and
/// no self-loops. Undirected graphs store each edge once with `u < v`; edges
/// are kept sorted lexicographically so edge order (and everything derived
/// from it, like gradient layouts) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    directedness: Directedness,
    edges: Vec<Edge>,
    /// Outgoing adjacency per node; for undirected graphs both endpoints see
    /// the edge.
    adj: Vec<Vec<(usize, f64)>>,
    /// Incoming adjacency; aliases `adj` content for undirected graphs.
    in_adj: Vec<Vec<(usize, f64)>>,
    labels: Option<Vec<String>>,
}

impl WeightedGraph {
    pub fn new_undirected(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::new(n, Directedness::Undirected, edges)
    }

    pub fn new_directed(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::new(n, Directedness::Directed, edges)
    }

    pub fn new(
        n: usize,
        directedness: Directedness,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut list: Vec<Edge> = Vec::new();
        for (u, v, w) in edges {
            if u >= n {
                return Err(Error::InvalidNode { node: u, n });
            }
            if v >= n {
                return Err(Error::InvalidNode { node: v, n });
            }
            if u == v {
                return Err(Error::SelfLoop { node: u });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidWeight { u, v, w });
            }
            let (a, b) = match directedness {
                Directedness::Undirected => (u.min(v), u.max(v)),
                Directedness::Directed => (u, v),
            };
            if !seen.insert((a, b)) {
                return Err(Error::DuplicateEdge { u: a, v: b });
            }
            list.push(Edge { u: a, v: b, w });
        }
        list.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));

        let mut adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for e in &list {
            adj[e.u].push((e.v, e.w));
            in_adj[e.v].push((e.u, e.w));
            if directedness == Directedness::Undirected {
                adj[e.v].push((e.u, e.w));
                in_adj[e.u].push((e.v, e.w));
            }
        }
        for row in adj.iter_mut().chain(in_adj.iter_mut()) {
            row.sort_by_key(|&(j, _)| j);
        }

        Ok(WeightedGraph {
            n,
            directedness,
            edges: list,
            adj,
            in_adj,
            labels: None,
        })
    }

    /// Attaches display labels (one per node). Labels survive LCC extraction.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "node labels",
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn directedness(&self) -> Directedness {
        self.directedness
    }

    pub fn is_undirected(&self) -> bool {
        self.directedness == Directedness::Undirected
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// Outgoing neighbors of `i` with weights, sorted by neighbor id.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn neighbor_count(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn weighted_out_degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn weighted_in_degree(&self, i: usize) -> f64 {
        self.in_adj[i].iter().map(|&(_, w)| w).sum()
    }

    /// Sum of stored edge weights (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_weight(u, v).is_some()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let (a, b) = match self.directedness {
            Directedness::Undirected => (u.min(v), u.max(v)),
            Directedness::Directed => (u, v),
        };
        self.adj[a]
            .binary_search_by_key(&b, |&(j, _)| j)
            .ok()
            .map(|k| self.adj[a][k].1)
    }

    /// Same topology, new weights, aligned with `edges()` order.
    pub fn with_edge_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                what: "edge weights",
                expected: self.edges.len(),
                got: weights.len(),
            });
        }
        let mut g = Self::new(
            self.n,
            self.directedness,
            self.edges
                .iter()
                .zip(weights)
                .map(|(e, &w)| (e.u, e.v, w)),
        )?;
        g.labels = self.labels.clone();
        Ok(g)
    }

    /// Dense combinatorial Laplacian `L = D - W` of an undirected graph.
    pub fn laplacian(&self) -> Result<DMatrix<f64>> {
        if !self.is_undirected() {
            return Err(Error::DirectedUnsupported { op: "laplacian" });
        }
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLargeForDense {
                n: self.n,
                limit: DENSE_LIMIT,
            });
        }
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.u, e.v)] = -e.w;
            l[(e.v, e.u)] = -e.w;
            l[(e.u, e.u)] += e.w;
            l[(e.v, e.v)] += e.w;
        }
        Ok(l)
    }

    pub fn adjacency_matrix(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLargeForDense {
                n: self.n,
                limit: DENSE_LIMIT,
            });
        }
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.u, e.v)] = e.w;
            if self.is_undirected() {
                a[(e.v, e.u)] = e.w;
            }
        }
        Ok(a)
    }

    /// Row-normalizes weights into a transition matrix `T_ij = w_ij / d_i`.
    /// Every node needs positive out-degree.
    pub fn row_stochastic(&self) -> Result<TransitionMatrix> {
        let mut rows = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let d: f64 = self.weighted_out_degree(i);
            if d <= 0.0 {
                return Err(Error::IsolatedNode { node: i });
            }
            rows.push(self.adj[i].iter().map(|&(j, w)| (j, w / d)).collect());
        }
        TransitionMatrix::from_rows(self.n, rows)
    }

    /// Signed incidence vector of an existing undirected edge: +1 at the
    /// smaller endpoint, -1 at the larger.
    pub fn incidence_vector(&self, u: usize, v: usize) -> Result<DVector<f64>> {
        if !self.is_undirected() {
            return Err(Error::DirectedUnsupported {
                op: "incidence_vector",
            });
        }
        if !self.has_edge(u, v) {
            return Err(Error::param(
                "edge",
                format!("({u}, {v}) is not an edge of the graph"),
            ));
        }
        let mut b = DVector::zeros(self.n);
        b[u.min(v)] = 1.0;
        b[u.max(v)] = -1.0;
        Ok(b)
    }

    /// Connected components, ignoring edge direction. Each component is a
    /// sorted node list; components are ordered by their smallest node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut queue = vec![start];
            let mut members = vec![start];
            comp[start] = id;
            while let Some(i) = queue.pop() {
                for &(j, _) in self.adj[i].iter().chain(self.in_adj[i].iter()) {
                    if comp[j] == usize::MAX {
                        comp[j] = id;
                        queue.push(j);
                        members.push(j);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        let comps = self.connected_components();
        if comps.len() > 1 {
            return Err(Error::Disconnected {
                components: comps.len(),
                witness: comps[1][0],
            });
        }
        Ok(())
    }

    /// Extracts the largest connected component (ties broken by smallest
    /// node id). Returns the subgraph plus the original id of each new node.
    pub fn largest_connected_component(&self) -> (WeightedGraph, Vec<usize>) {
        let comps = self.connected_components();
        let best = comps
            .iter()
            .max_by_key(|c| c.len())
            .expect("graph has at least one node");
        let mut new_id = vec![usize::MAX; self.n];
        for (k, &old) in best.iter().enumerate() {
            new_id[old] = k;
        }
        let edges = self.edges.iter().filter_map(|e| {
            let (u, v) = (new_id[e.u], new_id[e.v]);
            (u != usize::MAX && v != usize::MAX).then_some((u, v, e.w))
        });
        let mut g = WeightedGraph::new(best.len(), self.directedness, edges)
            .expect("subgraph of a valid graph is valid");
        if let Some(labels) = &self.labels {
            g.labels = Some(best.iter().map(|&old| labels[old].clone()).collect());
        }
        (g, best.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::new_undirected(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap()
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(
            WeightedGraph::new_undirected(2, [(0, 0, 1.0)]),
            Err(Error::SelfLoop { node: 0 })
        ));
        assert!(matches!(
            WeightedGraph::new_undirected(2, [(0, 2, 1.0)]),
            Err(Error::InvalidNode { node: 2, n: 2 })
        ));
        assert!(matches!(
            WeightedGraph::new_undirected(2, [(0, 1, 0.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::new_undirected(2, [(0, 1, f64::NAN)]),
            Err(Error::InvalidWeight { .. })
        ));
        // Reversed duplicates collide for undirected graphs.
        assert!(matches!(
            WeightedGraph::new_undirected(2, [(0, 1, 1.0), (1, 0, 1.0)]),
            Err(Error::DuplicateEdge { u: 0, v: 1 })
        ));
        // ...but are two distinct arcs when directed.
        assert!(WeightedGraph::new_directed(2, [(0, 1, 1.0), (1, 0, 1.0)]).is_ok());
        assert!(matches!(
            WeightedGraph::new_undirected(0, []),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn canonical_edge_order() {
        let g = WeightedGraph::new_undirected(4, [(3, 2, 1.0), (1, 0, 1.0), (3, 0, 1.0)]).unwrap();
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 3), (2, 3)]);
    }

    #[test]
    fn degrees_and_weights() {
        let g = path3();
        assert_eq!(g.neighbor_count(1), 2);
        assert_eq!(g.weighted_out_degree(1), 3.0);
        assert_eq!(g.weighted_in_degree(1), 3.0);
        assert_eq!(g.total_weight(), 3.0);
        assert_eq!(g.edge_weight(2, 1), Some(2.0));
        assert_eq!(g.edge_weight(0, 2), None);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = path3();
        let l = g.laplacian().unwrap();
        for i in 0..3 {
            let row_sum: f64 = (0..3).map(|j| l[(i, j)]).sum();
            assert!(row_sum.abs() < 1e-12);
        }
        assert_eq!(l[(1, 1)], 3.0);
        assert_eq!(l[(0, 1)], -1.0);
        assert_eq!(l[(1, 2)], -2.0);
        // x^T L x = sum_e w_e (x_u - x_v)^2 >= 0.
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let quad = (&x.transpose() * &l * &x)[(0, 0)];
        let direct = 1.0 * (1.0 - (-2.0f64)).powi(2) + 2.0 * (-2.0 - 0.5f64).powi(2);
        assert!((quad - direct).abs() < 1e-12);
    }

    #[test]
    fn row_stochastic_rows_sum_to_one() {
        let g = path3();
        let t = g.row_stochastic().unwrap();
        for i in 0..3 {
            let s: f64 = t.row(i).iter().map(|&(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(t.entry(1, 0), 1.0 / 3.0);
        assert_eq!(t.entry(1, 2), 2.0 / 3.0);
        assert_eq!(t.entry(0, 2), 0.0);

        let isolated = WeightedGraph::new_undirected(3, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            isolated.row_stochastic(),
            Err(Error::IsolatedNode { node: 2 })
        ));
    }

    #[test]
    fn incidence_vector_orientation() {
        let g = path3();
        let b = g.incidence_vector(2, 1).unwrap();
        assert_eq!(b[1], 1.0);
        assert_eq!(b[2], -1.0);
        assert_eq!(b[0], 0.0);
        assert!(g.incidence_vector(0, 2).is_err());
    }

    #[test]
    fn components_and_lcc() {
        let g = WeightedGraph::new_undirected(6, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        let comps = g.connected_components();
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
        assert!(!g.is_connected());
        assert!(matches!(
            g.require_connected(),
            Err(Error::Disconnected {
                components: 3,
                witness: 3
            })
        ));
        let (lcc, ids) = g.largest_connected_component();
        assert_eq!(lcc.n(), 3);
        assert_eq!(lcc.edge_count(), 2);
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn with_edge_weights_preserves_topology() {
        let g = path3();
        let h = g.with_edge_weights(&[5.0, 7.0]).unwrap();
        assert_eq!(h.edge_weight(0, 1), Some(5.0));
        assert_eq!(h.edge_weight(1, 2), Some(7.0));
        assert!(g.with_edge_weights(&[1.0]).is_err());
        assert!(g.with_edge_weights(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn labels_follow_lcc() {
        let g = WeightedGraph::new_undirected(3, [(1, 2, 1.0)])
            .unwrap()
            .with_labels(vec!["x".into(), "y".into(), "z".into()])
            .unwrap();
        let (lcc, _) = g.largest_connected_component();
        assert_eq!(lcc.labels(), Some(&["y".to_string(), "z".to_string()][..]));
    }
}
