//! Communication graph: agents `i` and `j` are adjacent iff their opinions are
//! within distance 1. Every vertex carries a self-loop.

use std::collections::VecDeque;

use crate::error::{HkError, Result};
use crate::scalar::Scalar;
use crate::state::Opinions;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

impl CommGraph {
    /// Graph of a configuration. Distances are compared squared against 1,
    /// and a pair at distance exactly 1 is adjacent.
    pub fn build<S: Scalar>(x: &Opinions<S>) -> Self {
        let n = x.n();
        let one = S::one();
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
            for j in i + 1..n {
                if x.sq_dist(i, j) <= one {
                    adjacency[i * n + j] = true;
                    adjacency[j * n + i] = true;
                }
            }
        }
        Self::from_adjacency_unchecked(n, adjacency)
    }

    /// Graph from a row-major boolean matrix. The matrix must be symmetric
    /// with a full diagonal.
    pub fn from_adjacency(n: usize, adjacency: Vec<bool>) -> Result<Self> {
        if n == 0 || adjacency.len() != n * n {
            return Err(HkError::InvalidParameter(format!(
                "adjacency must be a non-empty {n}x{n} matrix"
            )));
        }
        for i in 0..n {
            if !adjacency[i * n + i] {
                return Err(HkError::InvalidParameter(format!(
                    "vertex {i} lacks its self-loop"
                )));
            }
            for j in 0..i {
                if adjacency[i * n + j] != adjacency[j * n + i] {
                    return Err(HkError::InvalidParameter(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_adjacency_unchecked(n, adjacency))
    }

    /// Graph from an undirected edge list; self-loops are added.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
        }
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(HkError::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range"
                )));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        Self::from_adjacency(n, adjacency)
    }

    pub fn complete(n: usize) -> Self {
        Self::from_adjacency_unchecked(n, vec![true; n * n])
    }

    fn from_adjacency_unchecked(n: usize, adjacency: Vec<bool>) -> Self {
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect())
            .collect();

        let mut component_of = vec![usize::MAX; n];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            component_of[start] = id;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &w in &neighbors[v] {
                    if component_of[w] == usize::MAX {
                        component_of[w] = id;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }

        Self {
            n,
            adjacency,
            neighbors,
            components,
            component_of,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Closed neighbourhood of `i` in increasing order (includes `i`).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.component_of[i]
    }

    /// Hop distances from `src`; `None` outside its component.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap_or(0);
            for &w in &self.neighbors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Largest eccentricity of `v` within its own component.
    pub fn eccentricity(&self, v: usize) -> usize {
        self.bfs_distances(v)
            .into_iter()
            .flatten()
            .max()
            .unwrap_or(0)
    }

    /// Neighbour lists without self-loops, for serialization.
    pub fn edge_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                self.neighbors[i]
                    .iter()
                    .copied()
                    .filter(|&j| j != i)
                    .collect()
            })
            .collect()
    }
}
