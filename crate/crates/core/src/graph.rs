//! Connected finite metric graphs.
//!
//! Every edge is identified with an interval `[0, length]` whose origin is the
//! tail vertex. Vertices split into boundary vertices (carrying Dirichlet data)
//! and interior vertices (carrying continuity and Kirchhoff conditions).

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub length: f64,
}

impl Edge {
    /// Local coordinate of `v` on this edge: `0` at the tail, `length` at the head.
    pub fn coordinate_of(&self, v: VertexId) -> Option<f64> {
        if v == self.tail {
            Some(0.0)
        } else if v == self.head {
            Some(self.length)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricGraph {
    edges: Vec<Edge>,
    boundary: Vec<bool>,
    adjacency: Vec<Vec<EdgeId>>,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
}

/// Builds and validates a graph from `(tail, head, length)` triples.
///
/// Vertices are declared implicitly by the edges: the vertex count is one past
/// the largest id referenced. Vertex `i` is named `v{i+1}` and edge `k` is
/// named `e{k+1}`.
pub fn build_graph(edges: &[(usize, usize, f64)], boundary: &[usize]) -> Result<MetricGraph> {
    let n_vertices = edges.iter().map(|&(t, h, _)| t.max(h) + 1).max().unwrap_or(0);
    let vertex_names = (0..n_vertices).map(|i| format!("v{}", i + 1)).collect();
    let edge_names = (0..edges.len()).map(|k| format!("e{}", k + 1)).collect();
    MetricGraph::from_parts(edges, boundary, vertex_names, edge_names)
}

impl MetricGraph {
    pub(crate) fn from_parts(
        edges: &[(usize, usize, f64)],
        boundary: &[usize],
        vertex_names: Vec<String>,
        edge_names: Vec<String>,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n_vertices = vertex_names.len();
        let mut adjacency = vec![Vec::new(); n_vertices];
        let mut out = Vec::with_capacity(edges.len());
        for (k, &(tail, head, length)) in edges.iter().enumerate() {
            if tail == head {
                return Err(Error::SelfLoop { edge: k, vertex: tail });
            }
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::InvalidLength { edge: k, length });
            }
            if tail >= n_vertices || head >= n_vertices {
                return Err(Error::UnknownVertex(format!("#{}", tail.max(head))));
            }
            adjacency[tail].push(EdgeId(k));
            adjacency[head].push(EdgeId(k));
            out.push(Edge { tail: VertexId(tail), head: VertexId(head), length });
        }

        let mut is_boundary = vec![false; n_vertices];
        for &b in boundary {
            if b >= n_vertices || adjacency[b].is_empty() {
                let name = vertex_names.get(b).cloned().unwrap_or_else(|| format!("#{b}"));
                return Err(Error::BoundaryVertexUnknown(name));
            }
            is_boundary[b] = true;
        }

        // Breadth-first sweep from vertex 0; isolated ids count as disconnected.
        let mut seen = vec![false; n_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for e in &adjacency[v] {
                let edge = out[e.0];
                let w = if edge.tail.0 == v { edge.head.0 } else { edge.tail.0 };
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::DisconnectedGraph(v));
        }

        Ok(Self { edges: out, boundary: is_boundary, adjacency, vertex_names, edge_names })
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.adjacency.len()).map(VertexId)
    }

    /// The edges `E(v)` incident to `v`, in edge-id order.
    pub fn incident_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary[v.0]
    }

    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        self.vertex_ids().filter(|&v| self.is_boundary(v)).collect()
    }

    pub fn interior_vertices(&self) -> Vec<VertexId> {
        self.vertex_ids().filter(|&v| !self.is_boundary(v)).collect()
    }

    /// Incidence `n_e(v)`: -1 at the tail of `e`, +1 at its head, 0 otherwise.
    pub fn incidence(&self, e: EdgeId, v: VertexId) -> i8 {
        let edge = &self.edges[e.0];
        if v == edge.tail {
            -1
        } else if v == edge.head {
            1
        } else {
            0
        }
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edge_names.iter().position(|n| n == name).map(EdgeId)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// The ten-vertex, ten-edge demonstration graph with unit edge lengths.
///
/// Edge orientation is a reconstruction: `e1=(v1,v3)`, `e2=(v2,v3)`,
/// `e3=(v3,v4)`, `e4=(v4,v5)`, `e5=(v5,v7)`, `e6=(v4,v6)`, `e7=(v6,v7)`,
/// `e8=(v7,v8)`, `e9=(v8,v9)`, `e10=(v8,v10)`, boundary `{v1,v2,v9,v10}`.
/// Orientation only flips signs of `n_e(v)`, which the Kirchhoff sum absorbs.
pub fn demo_graph() -> MetricGraph {
    const EDGES: [(usize, usize); 10] =
        [(1, 3), (2, 3), (3, 4), (4, 5), (5, 7), (4, 6), (6, 7), (7, 8), (8, 9), (8, 10)];
    let edges: Vec<_> = EDGES.iter().map(|&(t, h)| (t - 1, h - 1, 1.0)).collect();
    build_graph(&edges, &[0, 1, 8, 9]).expect("demo graph is valid")
}
