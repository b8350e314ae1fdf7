//! Directed social network with mandatory self-loops.
//!
//! Node ids are 0-based here; external formats use 1-based ids and convert
//! at the boundary. The edge list is kept in lexicographic order, and that
//! order is the edge indexing used by the samplers.
//!
//! Edges that carry no influence weight are allowed. They still count toward
//! `d_i` and `|E|`, so they dilute the uniform sampling law.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::linalg::reverse_reach_all;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a social graph needs at least two agents, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({from}, {to}) has an endpoint outside 0..{n}")]
    EndpointOutOfRange { from: usize, to: usize, n: usize },
}

#[derive(Debug, Clone)]
pub struct SocialGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    // edges[offsets[i]..offsets[i + 1]] are the out-edges of i
    offsets: Vec<usize>,
    added_self_loops: Vec<usize>,
}

// Two graphs are equal when their edge sets are; how the self-loops got
// there does not matter.
impl PartialEq for SocialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for SocialGraph {}

impl SocialGraph {
    /// Builds a graph on `n` nodes. Duplicate edges are merged and missing
    /// self-loops are added; the nodes that needed one are listed by
    /// [`SocialGraph::added_self_loops`].
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n <= 1 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(GraphError::EndpointOutOfRange { from, to, n });
            }
            set.insert((from, to));
        }
        let added_self_loops: Vec<usize> = (0..n).filter(|&i| set.insert((i, i))).collect();
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut offsets = vec![0; n + 1];
        for &(from, _) in &edges {
            offsets[from + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self {
            n,
            edges,
            offsets,
            added_self_loops,
        })
    }

    /// Complete digraph with self-loops.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical (lexicographic) edge list.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes that had no self-loop in the input.
    pub fn added_self_loops(&self) -> &[usize] {
        &self.added_self_loops
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(|&(_, j)| j)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// Position of `(i, j)` in the canonical edge list.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        self.edges[lo..hi]
            .binary_search(&(i, j))
            .ok()
            .map(|k| lo + k)
    }

    /// True iff every node has a directed path (possibly of length zero) to
    /// some node in `targets`.
    pub fn reaches_target_set(&self, targets: &BTreeSet<usize>) -> bool {
        let mut incoming = vec![Vec::new(); self.n];
        for &(from, to) in &self.edges {
            if from != to {
                incoming[to].push(from);
            }
        }
        reverse_reach_all(&incoming, targets.iter().copied().filter(|&t| t < self.n))
    }

    pub fn degree_matrix(&self) -> DegreeMatrix {
        DegreeMatrix {
            diagonal: (0..self.n).map(|i| self.degree(i)).collect(),
        }
    }
}

/// Diagonal matrix of out-degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeMatrix {
    pub diagonal: Vec<usize>,
}

impl DegreeMatrix {
    pub fn as_f64(&self) -> Vec<f64> {
        self.diagonal.iter().map(|&d| d as f64).collect()
    }
}
