//! P1 finite elements on metric graphs.
//!
//! Every edge carries `n` equally spaced interior nodes; each vertex carries a
//! single shared dof, which builds vertex continuity into the space. Summing
//! the element contributions of all incident edges at a vertex dof imposes the
//! Kirchhoff flux condition weakly.

mod assembly;
mod dirichlet;
mod restrict;

use std::fmt;
use std::sync::Arc;

pub use assembly::{assemble, AssembledOperators, ElementCache};
pub use dirichlet::{apply_dirichlet, ReducedSystem};
pub use restrict::{restrict_to_batch, DirichletKind, Restriction};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, VertexId};

pub type EdgeFn = Arc<dyn Fn(EdgeId, f64) -> f64 + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(EdgeId, f64, f64) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(VertexId, f64) -> f64 + Send + Sync>;

/// Uniform mesh with `nodes_per_edge` interior nodes on every edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    pub nodes_per_edge: usize,
}

impl Mesh {
    pub fn new(nodes_per_edge: usize) -> Result<Self> {
        if nodes_per_edge == 0 {
            return Err(Error::Config("a mesh needs at least one interior node per edge".into()));
        }
        Ok(Self { nodes_per_edge })
    }

    pub fn elements_per_edge(&self) -> usize {
        self.nodes_per_edge + 1
    }

    pub fn spacing(&self, length: f64) -> f64 {
        length / self.elements_per_edge() as f64
    }
}

/// Dof numbering: vertex `v` owns dof `v`, then the interior nodes of each edge
/// follow in edge order, tail to head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    n_vertices: usize,
    nodes_per_edge: usize,
    endpoints: Vec<(usize, usize)>,
    constrained: Vec<bool>,
    dirichlet: Vec<VertexId>,
}

pub fn build_dofmap(graph: &MetricGraph, mesh: Mesh, dirichlet_vertices: &[VertexId]) -> Result<DofMap> {
    let n_vertices = graph.n_vertices();
    let n_dofs = n_vertices + graph.n_edges() * mesh.nodes_per_edge;
    let mut constrained = vec![false; n_dofs];
    let mut dirichlet = Vec::new();
    for &v in dirichlet_vertices {
        if v.0 >= n_vertices {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        if !constrained[v.0] {
            constrained[v.0] = true;
            dirichlet.push(v);
        }
    }
    dirichlet.sort();
    let endpoints = graph.edges().iter().map(|e| (e.tail.0, e.head.0)).collect();
    Ok(DofMap { n_vertices, nodes_per_edge: mesh.nodes_per_edge, endpoints, constrained, dirichlet })
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        self.constrained.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn nodes_per_edge(&self) -> usize {
        self.nodes_per_edge
    }

    pub fn n_edges(&self) -> usize {
        self.endpoints.len()
    }

    pub fn vertex_dof(&self, v: VertexId) -> usize {
        v.0
    }

    /// Dof of node `k` on edge `e`, `k = 0` being the tail vertex and
    /// `k = n + 1` the head vertex.
    pub fn node_dof(&self, e: EdgeId, k: usize) -> usize {
        let n = self.nodes_per_edge;
        let (tail, head) = self.endpoints[e.0];
        match k {
            0 => tail,
            k if k == n + 1 => head,
            k => self.n_vertices + e.0 * n + (k - 1),
        }
    }

    /// The `n + 2` node dofs of edge `e` from tail to head.
    pub fn edge_dofs(&self, e: EdgeId) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes_per_edge + 2).map(move |k| self.node_dof(e, k))
    }

    /// Interior node dofs of edge `e` (a contiguous range).
    pub fn interior_dofs(&self, e: EdgeId) -> std::ops::Range<usize> {
        let start = self.n_vertices + e.0 * self.nodes_per_edge;
        start..start + self.nodes_per_edge
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn constrained_mask(&self) -> &[bool] {
        &self.constrained
    }

    pub fn dirichlet_vertices(&self) -> &[VertexId] {
        &self.dirichlet
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs()).filter(|&d| !self.constrained[d]).collect()
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs()).filter(|&d| self.constrained[d]).collect()
    }
}

/// PDE coefficients and data: diffusion `a`, convection `b`, potential `p`,
/// source `f(x, t)`, boundary data `g_v(t)` and initial state `y0`.
#[derive(Clone)]
pub struct CoefficientSet {
    pub a: EdgeFn,
    pub b: EdgeFn,
    pub p: EdgeFn,
    pub f: SourceFn,
    pub g: BoundaryFn,
    pub y0: EdgeFn,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CoefficientSet { .. }")
    }
}

impl CoefficientSet {
    /// Pure diffusion with constant `a`, zero data.
    pub fn heat(a: f64) -> Self {
        Self {
            a: Arc::new(move |_, _| a),
            b: Arc::new(|_, _| 0.0),
            p: Arc::new(|_, _| 0.0),
            f: Arc::new(|_, _, _| 0.0),
            g: Arc::new(|_, _| 0.0),
            y0: Arc::new(|_, _| 0.0),
        }
    }

    pub fn with_a(mut self, a: impl Fn(EdgeId, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.a = Arc::new(a);
        self
    }

    pub fn with_b(mut self, b: impl Fn(EdgeId, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.b = Arc::new(b);
        self
    }

    pub fn with_p(mut self, p: impl Fn(EdgeId, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.p = Arc::new(p);
        self
    }

    pub fn with_source(mut self, f: impl Fn(EdgeId, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_boundary(mut self, g: impl Fn(VertexId, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g = Arc::new(g);
        self
    }

    pub fn with_initial(mut self, y0: impl Fn(EdgeId, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.y0 = Arc::new(y0);
        self
    }

    /// Samples `a` at `samples` equispaced points (endpoints included) of every edge.
    pub fn check_ellipticity(&self, graph: &MetricGraph, samples: usize) -> Result<f64> {
        let samples = samples.max(2);
        let mut min = f64::INFINITY;
        for e in graph.edge_ids() {
            let len = graph.edge(e).length;
            for s in 0..samples {
                let x = len * s as f64 / (samples - 1) as f64;
                let value = (self.a)(e, x);
                if !(value > 0.0) {
                    return Err(Error::NonellipticCoefficient { edge: e.0, x, value });
                }
                min = min.min(value);
            }
        }
        Ok(min)
    }

    /// Largest `|sum_e b_e(v) n_e(v)|` over interior vertices.
    pub fn convection_flux_residual(&self, graph: &MetricGraph) -> f64 {
        graph
            .interior_vertices()
            .into_iter()
            .map(|v| {
                graph
                    .incident_edges(v)
                    .iter()
                    .map(|&e| {
                        let x = graph.edge(e).coordinate_of(v).unwrap();
                        (self.b)(e, x) * f64::from(graph.incidence(e, v))
                    })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Nodal interpolant of an edge field. Vertex values come from the first
/// incident edge.
pub fn interpolate(graph: &MetricGraph, dofmap: &DofMap, field: impl Fn(EdgeId, f64) -> f64) -> Vec<f64> {
    let mut u = vec![0.0; dofmap.n_dofs()];
    let mut vertex_set = vec![false; dofmap.n_vertices()];
    let n = dofmap.nodes_per_edge();
    for e in graph.edge_ids() {
        let len = graph.edge(e).length;
        let dx = len / (n + 1) as f64;
        for k in 0..n + 2 {
            let dof = dofmap.node_dof(e, k);
            if dof < dofmap.n_vertices() {
                if vertex_set[dof] {
                    continue;
                }
                vertex_set[dof] = true;
            }
            u[dof] = field(e, if k == n + 1 { len } else { k as f64 * dx });
        }
    }
    u
}

/// Points per element of the rule used for L2 norms.
const NORM_POINTS: usize = 5;

/// Squared L2 distance between the P1 function `u` and a reference field,
/// by Gauss quadrature on every element.
pub fn l2_error_sq(
    graph: &MetricGraph,
    dofmap: &DofMap,
    u: &[f64],
    reference: impl Fn(EdgeId, f64) -> f64,
) -> f64 {
    let (xs, ws) = crate::quadrature::gauss_legendre(NORM_POINTS);
    let n_el = dofmap.nodes_per_edge() + 1;
    let mut total = 0.0;
    for e in graph.edge_ids() {
        let dx = graph.edge(e).length / n_el as f64;
        for k in 0..n_el {
            let u0 = u[dofmap.node_dof(e, k)];
            let u1 = u[dofmap.node_dof(e, k + 1)];
            for (&s, &w) in xs.iter().zip(&ws) {
                let diff = u0 + (u1 - u0) * s - reference(e, (k as f64 + s) * dx);
                total += w * dx * diff * diff;
            }
        }
    }
    total
}

/// Squared L2 distance between two P1 functions, computed exactly.
pub fn l2_distance_sq(graph: &MetricGraph, dofmap: &DofMap, u: &[f64], v: &[f64]) -> f64 {
    let n_el = dofmap.nodes_per_edge() + 1;
    let mut total = 0.0;
    for e in graph.edge_ids() {
        let dx = graph.edge(e).length / n_el as f64;
        for k in 0..n_el {
            let (i, j) = (dofmap.node_dof(e, k), dofmap.node_dof(e, k + 1));
            let (d0, d1) = (u[i] - v[i], u[j] - v[j]);
            total += dx / 3.0 * (d0 * d0 + d0 * d1 + d1 * d1);
        }
    }
    total
}
